#include "cpssv/scenarios.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cpssv/numfmt.hpp"
#include "cpssv/random.hpp"

namespace cpssv {

namespace {

Scenario finish(std::string model, std::string deployment, const std::string& name) {
  Scenario s;
  s.model = parse_model(model, name + ".cpss");
  s.deployment = parse_deployment(deployment, name + ".toml");
  s.model_text = std::move(model);
  s.deployment_text = std::move(deployment);
  return s;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += fmt(items[i]);
  }
  return out;
}

std::string num(double v) { return format_real(v); }
// 15 significant digits: "0.2" rather than "0.19999999999999996" for 1 - 0.8.
std::string prob(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return format_number(std::strtod(buf, nullptr));
}

}  // namespace

// ---------------------------------------------------------------------------
// Capture the flag

Scenario gen_capture_flag(const CaptureFlagSpec& spec) {
  const std::vector<std::string> locs = {"RA", "RB", "RC", "RD", "HA", "HB"};
  const std::vector<std::pair<int, int>> edges = {{0, 4}, {2, 4}, {4, 5}, {1, 5}, {3, 5}};
  auto index_of = [&](const std::string& n) {
    auto it = std::find(locs.begin(), locs.end(), n);
    if (it == locs.end()) throw std::invalid_argument("unknown location '" + n + "'");
    return static_cast<int>(it - locs.begin());
  };
  std::vector<int> flag(locs.size(), 0);
  std::vector<int> camera(locs.size(), 0);
  for (const auto& f : spec.flags) flag[index_of(f)] += 1;
  for (const auto& c : spec.cameras) camera[index_of(c)] = 1;

  std::ostringstream m;
  m << "// Capture the flag: two robots collect flags in a building watched by cameras.\n\n"
    << "globals {\n"
    << "  int numFlag = 0;\n"
    << "  int flag[6] = {" << join(flag, [](int v) { return std::to_string(v); }) << "};\n"
    << "  bool camera[6] = {" << join(camera, [](int v) { return std::string(v ? "true" : "false"); }) << "};\n"
    << "  int avoid[6];\n"
    << "}\n\n"
    << "agentclass robot {\n"
    << "  locals {\n"
    << "    int detected = 0;\n"
    << "    int seen = -1;\n"
    << "    int pos = 0;\n"
    << "  }\n"
    << "  spatial {\n"
    << "    initial RA\n";
  for (const auto& l : locs) m << "    state " << l << " delay exp(" << num(spec.move_rate) << ")\n";
  for (const auto& [a, b] : edges) {
    m << "    on " << locs[a] << " -> " << locs[b] << " guard avoid[" << b << "] == 0\n";
    m << "    on " << locs[b] << " -> " << locs[a] << " guard avoid[" << a << "] == 0\n";
  }
  m << "  }\n"
    << "  interaction {\n"
    << "    entry Notify exit Notified\n"
    << "    state Notify\n"
    << "    state Notified\n"
    << "    on Notify -> Notified prob " << prob(spec.notify_success) << " do { avoid[seen] = 1; }\n";
  if (spec.notify_success < 1.0) m << "    on Notify -> Notified prob " << prob(1.0 - spec.notify_success) << "\n";
  m << "  }\n"
    << "  predicates {\n"
    << "    failure terminated when detected >= 2 do { pos = -1; }\n"
    << "  }\n"
    << "  hooks {\n"
    << "    on_init { pos = self_pos(); }\n"
    << "    on_move {\n"
    << "      pos = self_pos();\n"
    << "      numFlag = numFlag + flag[pos];\n"
    << "      flag[pos] = 0;\n"
    << "      if (camera[pos]) {\n"
    << "        detected = detected + 1;\n"
    << "        seen = pos;\n"
    << "      }\n"
    << "    }\n"
    << "    check_interaction seen >= 0\n"
    << "    on_interaction_exit { seen = -1; }\n"
    << "  }\n"
    << "}\n";

  std::ostringstream d;
  d << "horizon = 20\n"
    << "property = \"" << kCaptureFlagProperty << "\"\n\n"
    << "[instances.robot]\n"
    << "count = 2\n"
    << "initial = [\"RA\", \"RC\"]\n";
  return finish(m.str(), d.str(), "flag");
}

// ---------------------------------------------------------------------------
// Honeybee

double GridSpec::temp(int cell) const {
  if (temperature.empty()) return default_temperature_field(width, height, t_min, t_max).at(static_cast<std::size_t>(cell));
  return temperature.at(static_cast<std::size_t>(cell));
}

void GridSpec::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be at least 1");
  if (!temperature.empty() && temperature.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("temperature field needs width*height entries");
  }
  if (!(t_max > t_min)) throw std::invalid_argument("t_max must exceed t_min");
  for (double t : temperature) {
    if (t < t_min || t > t_max) throw std::invalid_argument("temperature " + format_number(t) + " outside range");
  }
  if (!(rest_min > 0 && rest_max > 0)) throw std::invalid_argument("resting times must be positive");
  if (!(move_rate > 0)) throw std::invalid_argument("move rate must be positive");
}

double resting_time(const GridSpec& g, double t) {
  return g.rest_min + (g.rest_max - g.rest_min) * (t - g.t_min) / (g.t_max - g.t_min);
}

std::int64_t cluster_threshold(std::int64_t n) { return n <= 15 ? (2 * n) / 3 + 1 : 15; }

std::vector<double> default_temperature_field(int width, int height, double t_min, double t_max) {
  // Hottest cell at 3/4 of each axis; linear fall-off to t_min at the far corner.
  const double cx = 0.75 * width - 0.5;
  const double cy = 0.75 * height - 0.5;
  const double core = std::hypot(0.5, 0.5);
  double far = 0.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) far = std::max(far, std::hypot(x - cx, y - cy));
  std::vector<double> t(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      double v = t_max;
      if (d > core + 1e-9 && far > core) v = t_max - (t_max - t_min) * (d - core) / (far - core);
      t[static_cast<std::size_t>(y) * width + x] = std::round(std::clamp(v, t_min, t_max) * 10.0) / 10.0;
    }
  }
  return t;
}

int cell_near_temperature(const GridSpec& g, double t) {
  const std::vector<double> field =
      g.temperature.empty() ? default_temperature_field(g.width, g.height, g.t_min, g.t_max) : g.temperature;
  int best = 0;
  for (int c = 1; c < static_cast<int>(field.size()); ++c) {
    if (std::fabs(field[c] - t) < std::fabs(field[best] - t)) best = c;
  }
  return best;
}

Scenario gen_honeybee(const GridSpec& grid_in, int n_robots, BeeStart start) {
  GridSpec grid = grid_in;
  if (grid.temperature.empty()) grid.temperature = default_temperature_field(grid.width, grid.height, grid.t_min, grid.t_max);
  grid.validate();
  const int cells = grid.width * grid.height;
  if (n_robots < 1) throw std::invalid_argument("at least one robot is required");
  if (n_robots > cells) throw std::invalid_argument("more robots than grid cells");
  if (start.cell >= cells) throw std::invalid_argument("start cell outside the grid");

  const double hottest = *std::max_element(grid.temperature.begin(), grid.temperature.end());
  std::vector<int> level(cells);
  std::vector<int> optimal(cells);
  for (int c = 0; c < cells; ++c) {
    level[c] = static_cast<int>(std::lround(resting_time(grid, grid.temp(c))));
    level[c] = std::max(1, level[c]);
    optimal[c] = grid.temp(c) >= hottest;
  }
  std::set<int> levels(level.begin(), level.end());
  auto name = [&](int c) { return "C" + std::to_string(c % grid.width) + "_" + std::to_string(c / grid.width); };

  std::ostringstream m;
  m << "// Honeybee-inspired aggregation on a " << grid.width << "x" << grid.height << " temperature grid.\n\n"
    << "globals {\n"
    << "  int occ[" << cells << "];\n"
    << "  int rest[" << cells << "] = {" << join(level, [](int v) { return std::to_string(v); }) << "};\n"
    << "  bool optimal[" << cells << "] = {"
    << join(optimal, [](int v) { return std::string(v ? "true" : "false"); }) << "};\n"
    << "  int robots = 0;\n"
    << "  int threshold = 0;\n"
    << "}\n\n"
    << "agentclass robot {\n"
    << "  locals {\n"
    << "    int cell = 0;\n"
    << "    bool stopped = false;\n"
    << "  }\n"
    << "  spatial {\n";
  for (int c = 0; c < cells; ++c) m << "    state " << name(c) << " delay exp(" << num(grid.move_rate) << ")\n";
  for (int c = 0; c < cells; ++c) {
    const int x = c % grid.width;
    const int y = c / grid.width;
    std::vector<int> nb;
    if (y > 0) nb.push_back(c - grid.width);
    if (y + 1 < grid.height) nb.push_back(c + grid.width);
    if (x > 0) nb.push_back(c - 1);
    if (x + 1 < grid.width) nb.push_back(c + 1);
    for (int n : nb) m << "    on " << name(c) << " -> " << name(n) << " prob " << prob(1.0 / nb.size()) << "\n";
  }
  m << "  }\n"
    << "  interaction {\n"
    << "    entry Collide exit Resume\n"
    << "    state Collide\n";
  for (int l : levels) m << "    state Rest" << l << " delay exp(" << num(1.0 / l) << ") timed\n";
  m << "    state Resume\n";
  for (int l : levels) {
    m << "    on Collide -> Rest" << l << " guard rest[cell] == " << l << "\n";
    m << "    on Rest" << l << " -> Resume\n";
  }
  m << "  }\n"
    << "  predicates {\n"
    << "    success OptimalCluster when optimal[cell] && occ[cell] >= 2\n"
    << "  }\n"
    << "  hooks {\n"
    << "    on_init {\n"
    << "      cell = self_pos();\n"
    << "      occ[cell] = occ[cell] + 1;\n"
    << "      robots = robots + 1;\n"
    << "      if (robots <= 15) { threshold = (2 * robots) / 3 + 1; } else { threshold = 15; }\n"
    << "    }\n"
    << "    on_move {\n"
    << "      occ[cell] = occ[cell] - 1;\n"
    << "      cell = self_pos();\n"
    << "      occ[cell] = occ[cell] + 1;\n"
    << "      stopped = false;\n"
    << "    }\n"
    << "    check_interaction occ[cell] >= 2 && !stopped\n"
    << "    on_interaction_exit { stopped = true; }\n"
    << "  }\n"
    << "}\n";

  std::ostringstream d;
  d << "horizon = 1000\n"
    << "max_events = 10000000\n"
    << "property = \"" << kHoneybeeProperty << "\"\n\n"
    << "[instances.robot]\n"
    << "count = " << n_robots << "\n";
  if (start.cell >= 0) {
    d << "initial = \"" << name(start.cell) << "\"\n";
  } else {
    d << "initial_dist = { " << join(std::vector<int>([&] {
                                  std::vector<int> v(cells);
                                  std::iota(v.begin(), v.end(), 0);
                                  return v;
                                }()),
                                [&](int c) { return name(c) + " = " + prob(1.0 / cells); })
      << " }\n";
  }
  return finish(m.str(), d.str(), "honeybee");
}

// ---------------------------------------------------------------------------
// City

void CitySpec::validate() const {
  if (buildings < 2) throw std::invalid_argument("a city needs at least 2 buildings");
  if (area < 0 || area > buildings) throw std::invalid_argument("area must lie in [0, buildings]");
  const int kept = area ? area : buildings;
  if (victim_zone < 1 || victim_zone > kept) throw std::invalid_argument("victim zone must lie in [1, area]");
  if (victims < 1) throw std::invalid_argument("at least one victim is required");
  for (double p : {danger_fraction, hazard_high, hazard_low, crash_given_hazard, bluetooth_delivery}) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("probabilities must lie in [0, 1]");
  }
  if (battery < 1 || consume_min < 1 || consume_max < consume_min) throw std::invalid_argument("invalid battery model");
  if (zigbee_relays < 0) throw std::invalid_argument("zigbee_relays must be >= 0");
  if (!(avoid_period >= 0) || !(horizon > 0)) throw std::invalid_argument("invalid time parameters");
}

namespace {

struct City {
  std::vector<std::vector<int>> adj;  // kept locations, breadth-first labels
  std::vector<double> hazard;
  std::vector<int> station_rank;
};

City build_city(const CitySpec& spec) {
  spec.validate();
  const int n = spec.buildings;
  RandomStream rng = RandomStream::derive(spec.seed, 0xC17);
  std::vector<std::set<int>> g(n);
  auto link = [&](int a, int b) {
    if (a == b) return;
    g[a].insert(b);
    g[b].insert(a);
  };
  // Spanning tree (each node joins one of its four predecessors) plus short chords.
  for (int i = 1; i < n; ++i) link(i, i - 1 - static_cast<int>(rng.below(std::min(i, 4))));
  for (int k = 0; k < n / 2; ++k) {
    const int a = static_cast<int>(rng.below(n));
    const int b = a + 2 + static_cast<int>(rng.below(4));
    if (b < n) link(a, b);
  }
  // Relabel in breadth-first order from node 0 (the victim zone centre).
  std::vector<int> order;
  std::vector<int> label(n, -1);
  std::queue<int> q;
  q.push(0);
  label[0] = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    order.push_back(v);
    for (int w : g[v]) {
      if (label[w] < 0) {
        label[w] = static_cast<int>(order.size() + q.size());
        q.push(w);
      }
    }
  }
  const int kept = spec.area ? spec.area : n;
  City c;
  c.adj.resize(kept);
  for (int v = 0; v < n; ++v) {
    if (label[v] >= kept) continue;
    for (int w : g[v]) {
      if (label[w] < kept) c.adj[label[v]].push_back(label[w]);
    }
    std::sort(c.adj[label[v]].begin(), c.adj[label[v]].end());
  }
  c.hazard.resize(kept);
  std::vector<std::pair<std::uint64_t, int>> keys;
  for (int l = 0; l < kept; ++l) {
    RandomStream r = RandomStream::derive(spec.seed, 0xA2A, static_cast<std::uint64_t>(l));
    const bool danger = l >= spec.victim_zone && r.uniform01() < spec.danger_fraction;
    c.hazard[l] = danger ? spec.hazard_high : spec.hazard_low;
    keys.emplace_back(r.next(), l);
  }
  // Station order: seeded ranking of the kept locations.
  std::sort(keys.begin(), keys.end());
  c.station_rank.resize(kept);
  for (int i = 0; i < kept; ++i) c.station_rank[keys[i].second] = i;
  return c;
}

}  // namespace

std::vector<std::vector<int>> city_graph(const CitySpec& spec) { return build_city(spec).adj; }

std::string city_property(const CitySpec& spec) {
  return "F[SystemTime<=" + format_number(spec.horizon) + "](CrashNum<=1 && OutofBatteryNum<=1 && SavedVictimNum>=" +
         std::to_string((spec.victims + 1) / 2) + ")";
}

Scenario gen_city(const CitySpec& spec, int n_uavs, int n_stations, Protocol protocol, std::optional<int> distance) {
  const City city = build_city(spec);
  const int kept = static_cast<int>(city.adj.size());
  if (n_uavs < 0) throw std::invalid_argument("UAV count must be non-negative");
  if (n_stations < 0 || n_stations > kept) throw std::invalid_argument("station count must lie in [0, locations]");
  auto loc = [](int l) { return "L" + std::to_string(l); };
  auto ints = [](const std::vector<int>& v) { return join(v, [](int x) { return std::to_string(x); }); };

  std::ostringstream m;
  m << "// UAV search and rescue over a " << kept << "-location city.\n\n"
    << "const STATIONS = " << n_stations << ";\n"
    << "const CAPACITY = " << spec.battery << ";\n"
    << "const AVOID = " << num(spec.avoid_period) << ";\n\n"
    << "globals {\n"
    << "  int CrashNum = 0;\n"
    << "  int OutofBatteryNum = 0;\n"
    << "  int SavedVictimNum = 0;\n"
    << "  int uav_occ[" << kept << "];\n"
    << "  int station_rank[" << kept << "] = {" << ints(city.station_rank) << "};\n"
    << "  real avoid_until[" << kept << "];\n"
    << "}\n\n";

  // UAV
  m << "agentclass UAV {\n"
    << "  locals {\n"
    << "    int battery = CAPACITY;\n"
    << "    int cell = 0;\n"
    << "    int hit = 0;\n"
    << "    int hazard = -1;\n"
    << "  }\n"
    << "  spatial {\n";
  for (int l = 0; l < kept; ++l) m << "    state " << loc(l) << " delay exp(1.0)\n";
  const int costs = spec.consume_max - spec.consume_min + 1;
  for (int a = 0; a < kept; ++a) {
    for (int b : city.adj[a]) {
      const std::string head = "    on " + loc(a) + " -> " + loc(b) + " guard avoid_until[" + std::to_string(b) + "] <= now()";
      const double h = city.hazard[b];
      for (int c = spec.consume_min; c <= spec.consume_max; ++c) {
        m << head << " prob " << prob((1.0 - h) / costs) << " do { battery = battery - " << c << "; }\n";
      }
      const double survive = h * (1.0 - spec.crash_given_hazard);
      const double crash = h * spec.crash_given_hazard;
      if (survive > 0) {
        m << head << " prob " << prob(survive) << " do { battery = battery - " << spec.consume_max << "; hazard = " << b
          << "; }\n";
      }
      if (crash > 0) m << head << " prob " << prob(crash) << " do { hit = 1; }\n";
    }
    // Hover when every neighbour is being avoided.
    m << "    on " << loc(a) << " -> " << loc(a) << " guard "
      << join(city.adj[a], [](int b) { return "avoid_until[" + std::to_string(b) + "] > now()"; }, " && ")
      << " do { battery = battery - " << spec.consume_min << "; }\n";
  }
  m << "  }\n"
    << "  interaction {\n"
    << "    entry Notify exit Done\n"
    << "    state Notify\n";
  const double p = spec.bluetooth_delivery;
  const std::string deliver = " do { avoid_until[hazard] = now() + AVOID; }";
  if (protocol == Protocol::Bluetooth) {
    m << "    state Done\n";
    if (p > 0) m << "    on Notify -> Done prob " << prob(p) << deliver << "\n";
    if (p < 1) m << "    on Notify -> Done prob " << prob(1 - p) << "\n";
  } else {
    for (int r = 1; r <= spec.zigbee_relays; ++r) m << "    state Relay" << r << "\n";
    m << "    state Done\n";
    for (int r = 0; r <= spec.zigbee_relays; ++r) {
      const std::string from = r == 0 ? "Notify" : "Relay" + std::to_string(r);
      const std::string next = r == spec.zigbee_relays ? "Done" : "Relay" + std::to_string(r + 1);
      if (p > 0) m << "    on " << from << " -> Done prob " << prob(p) << deliver << "\n";
      if (p < 1) m << "    on " << from << " -> " << next << " prob " << prob(1 - p) << "\n";
    }
  }
  m << "  }\n"
    << "  predicates {\n"
    << "    failure Crashed when hit == 1 do {\n"
    << "      CrashNum = CrashNum + 1;\n"
    << "      uav_occ[cell] = uav_occ[cell] - 1;\n"
    << "    }\n"
    << "    failure OutofBattery when battery <= 0 do {\n"
    << "      OutofBatteryNum = OutofBatteryNum + 1;\n"
    << "      uav_occ[cell] = uav_occ[cell] - 1;\n"
    << "    }\n"
    << "  }\n"
    << "  hooks {\n"
    << "    on_init {\n"
    << "      cell = self_pos();\n"
    << "      uav_occ[cell] = uav_occ[cell] + 1;\n"
    << "    }\n"
    << "    on_move {\n"
    << "      uav_occ[cell] = uav_occ[cell] - 1;\n"
    << "      cell = self_pos();\n"
    << "      uav_occ[cell] = uav_occ[cell] + 1;\n"
    << "      if (station_rank[cell] < STATIONS) { battery = CAPACITY; }\n"
    << "    }\n"
    << "    check_interaction hazard >= 0\n"
    << "    on_interaction_exit { hazard = -1; }\n"
    << "  }\n"
    << "}\n\n";

  // Victim: wanders slowly inside the zone (labels 0..zone-1).
  const int zone = spec.victim_zone;
  m << "agentclass Victim {\n"
    << "  spatial {\n";
  for (int l = 0; l < zone; ++l) m << "    state " << loc(l) << " delay exp(1.0)\n";
  for (int a = 0; a < zone; ++a) {
    std::vector<int> nb;
    for (int b : city.adj[a]) {
      if (b < zone) nb.push_back(b);
    }
    if (nb.empty()) {
      m << "    on " << loc(a) << " -> " << loc(a) << "\n";
      continue;
    }
    m << "    on " << loc(a) << " -> " << loc(a) << " prob 0.9\n";
    for (int b : nb) m << "    on " << loc(a) << " -> " << loc(b) << " prob " << prob(0.1 / nb.size()) << "\n";
  }
  m << "  }\n"
    << "  predicates {\n"
    << "    success Saved when uav_occ[self_pos()] > 0 do { SavedVictimNum = SavedVictimNum + 1; }\n"
    << "  }\n"
    << "}\n";

  std::ostringstream d;
  d << "horizon = " << format_number(spec.horizon) << "\n"
    << "property = \"" << city_property(spec) << "\"\n\n"
    << "[instances.UAV]\n"
    << "count = " << n_uavs << "\n";
  if (distance) {
    d << "near = \"Victim\"\n"
      << "distance = " << *distance << "\n";
  } else {
    d << "initial = \"" << loc(std::min(spec.base, kept - 1)) << "\"\n";
  }
  d << "\n[instances.Victim]\n"
    << "count = " << spec.victims << "\n"
    << "initial_dist = { ";
  for (int l = 0; l < zone; ++l) d << (l ? ", " : "") << loc(l) << " = " << prob(1.0 / zone);
  d << " }\n";
  return finish(m.str(), d.str(), "city");
}

}  // namespace cpssv
