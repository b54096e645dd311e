#include "cpssv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "cpssv/engine.hpp"
#include "cpssv/model.hpp"
#include "cpssv/monitor.hpp"
#include "cpssv/scenarios.hpp"
#include "cpssv/smc.hpp"
#include "cpssv/weaver.hpp"

namespace cpssv {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelInput {
  std::string model;
  std::string deploy;  // empty: sibling .toml when present
};

std::string deployment_path(const ModelInput& in) {
  if (!in.deploy.empty()) return in.deploy;
  fs::path p(in.model);
  p.replace_extension(".toml");
  return fs::exists(p) ? p.string() : std::string();
}

struct Loaded {
  ModelDocument doc;
  Deployment dep;
};

void print_parse_error(std::ostream& err, const ParseError& e) {
  for (const auto& d : e.diagnostics()) err << d.str() << "\n";
}

Loaded load(const ModelInput& in, std::ostream& err, bool need_valid = true) {
  Loaded l;
  l.doc = parse_model(read_file(in.model), in.model);
  if (need_valid) {
    const ValidationReport rep = validate_model(l.doc);
    if (rep.warning_count()) {
      for (const auto& d : rep.items) {
        if (d.severity == Severity::Warning) err << d.str() << "\n";
      }
    }
    if (!rep.ok()) {
      err << rep;
      throw InputError(std::to_string(rep.error_count()) + " validation error(s)");
    }
  }
  const std::string dpath = deployment_path(in);
  if (!dpath.empty()) l.dep = parse_deployment(read_file(dpath), dpath);
  return l;
}

std::string property_text(const std::string& flag, const std::string& file, const Deployment& dep) {
  if (!flag.empty()) return flag;
  if (!file.empty()) {
    std::string s = read_file(file);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  }
  if (!dep.property.empty()) return dep.property;
  throw UsageError("no property: pass --prop or set `property` in the deployment");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& err) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (std::uint64_t{rd()} << 32) ^ rd();
  err << "seed: " << s << "\n";
  return s;
}

unsigned resolve_workers(unsigned flag) {
  if (const char* env = std::getenv("CPSSV_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0') return static_cast<unsigned>(v);
  }
  return flag;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw InputError("cannot write '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& os() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

struct SmcOptions {
  std::string prop;
  std::string prop_file;
  std::uint64_t runs = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double confidence = 0.95;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  double horizon = -1.0;
  std::string format = "csv";
  std::string out;
  bool reproducible = false;
  std::string fault_policy = "violation";
};

void add_smc_options(CLI::App* sub, SmcOptions& o) {
  sub->add_option("--prop", o.prop, "MTL property (default: the deployment's)");
  sub->add_option("--prop-file", o.prop_file, "File holding the property")->excludes("--prop");
  auto* runs = sub->add_option("--runs,-n", o.runs, "Number of runs")->check(CLI::PositiveNumber);
  sub->add_option("--epsilon", o.epsilon, "Absolute error bound (Okamoto run count)")->excludes(runs);
  sub->add_option("--delta", o.delta, "Error probability (Okamoto run count)")->excludes(runs);
  sub->add_option("--confidence", o.confidence, "Confidence of the reported interval");
  sub->add_option("--seed", o.seed, "Base seed (random and printed when absent)");
  sub->add_option("--workers,-j", o.workers, "Worker threads (0: all cores; CPSSV_WORKERS overrides)");
  sub->add_option("--horizon", o.horizon, "Override the deployment horizon");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "csv", "json"}));
  sub->add_option("--out,-o", o.out, "Write results to this file");
  sub->add_flag("--reproducible", o.reproducible, "Write wall_ms as 0 for byte-identical output");
  sub->add_option("--fault-policy", o.fault_policy, "Runs ending in a script fault")
      ->check(CLI::IsMember({"violation", "abort"}));
}

SmcConfig make_config(const SmcOptions& o, std::ostream& err) {
  SmcConfig cfg;
  if (o.epsilon > 0 || o.delta > 0) {
    cfg.mode = SmcConfig::Mode::Okamoto;
    if (o.epsilon > 0) cfg.epsilon = o.epsilon;
    if (o.delta > 0) cfg.delta = o.delta;
  } else if (o.runs > 0) {
    cfg.runs = o.runs;
  }
  cfg.confidence = o.confidence;
  cfg.seed = resolve_seed(o.seed, err);
  cfg.workers = resolve_workers(o.workers);
  cfg.horizon = o.horizon;
  cfg.fault_policy = o.fault_policy == "abort" ? FaultPolicy::Abort : FaultPolicy::Violation;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void report(const SmcOptions& o, const std::vector<SweepPoint>& pts, const std::string& prop, const SmcConfig& cfg,
            std::ostream& out) {
  Output dst(o.out, out);
  ReportOptions ropt;
  ropt.reproducible = o.reproducible;
  if (o.format == "json") {
    write_json(dst.os(), pts, prop, cfg, ropt);
  } else if (o.format == "text") {
    write_text(dst.os(), pts, ropt);
  } else {
    write_csv(dst.os(), pts, ropt);
  }
}

void warn_faults(const std::vector<SweepPoint>& pts, std::ostream& err) {
  for (const auto& p : pts) {
    if (p.result.faults) {
      err << "warning: " << p.result.faults << " run(s) ended in a fault at " << p.value << ": "
          << p.result.first_fault << "\n";
    }
  }
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError("empty value in --param list");
    out.push_back(item);
  }
  if (out.empty()) throw UsageError("--param needs at least one value");
  return out;
}

// Subcommands ----------------------------------------------------------------

int cmd_validate(const ModelInput& in, std::ostream& out, std::ostream& err) {
  const ModelDocument doc = parse_model(read_file(in.model), in.model);
  ValidationReport rep = validate_model(doc);
  if (rep.ok()) {
    for (const auto& cls : doc.classes) {
      try {
        rep.append(validate_composed(weave(cls)));
      } catch (const WeaveError& e) {
        rep.error(e.what(), cls.name);
      }
    }
  }
  err << rep;
  if (!rep.ok()) return kExitInput;
  if (const std::string dpath = deployment_path(in); !dpath.empty()) {
    const Deployment dep = parse_deployment(read_file(dpath), dpath);
    const Network net = instantiate(doc, dep);
    out << in.model << ": ok (" << doc.classes.size() << " classes, " << net.instances.size() << " instances, "
        << rep.warning_count() << " warnings)\n";
  } else {
    out << in.model << ": ok (" << doc.classes.size() << " classes, " << rep.warning_count() << " warnings)\n";
  }
  return kExitOk;
}

int cmd_weave(const ModelInput& in, const std::string& cls_name, bool dot, const std::string& out_path,
              std::ostream& out, std::ostream& err) {
  const Loaded l = load(in, err);
  Output dst(out_path, out);
  bool any = false;
  for (const auto& decl : l.doc.classes) {
    if (!cls_name.empty() && decl.name != cls_name) continue;
    any = true;
    const AgentClass c = weave(decl);
    const ValidationReport rep = validate_composed(c);
    err << rep;
    if (!rep.ok()) return kExitInput;
    if (dot) {
      dst.os() << to_dot(c);
      continue;
    }
    dst.os() << "class " << c.name << ": " << c.spatial_count << " spatial, " << c.predicate_count << " predicate, "
             << c.interaction_count << " interaction states; " << c.composed.transitions.size() << " transitions\n";
    for (std::size_t i = 0; i < c.composed.states.size(); ++i) {
      const char* part = c.part_of(i) == AgentClass::Part::Spatial     ? "spatial"
                         : c.part_of(i) == AgentClass::Part::Predicate ? "predicate"
                                                                       : "interaction";
      dst.os() << "  state " << c.composed.states[i].id << " [" << part << "]\n";
    }
    for (const auto& t : c.composed.transitions) {
      dst.os() << "  " << t.source << " -> " << t.target << " prob " << t.prob << "\n";
    }
  }
  if (!any) throw UsageError("no class named '" + cls_name + "'");
  return kExitOk;
}

int cmd_simulate(const ModelInput& in, const std::optional<std::uint64_t>& seed_opt, double horizon,
                 const std::string& trace_path, const std::string& prop_flag, std::ostream& out, std::ostream& err) {
  const Loaded l = load(in, err);
  const Network net = instantiate(l.doc, l.dep);
  const std::uint64_t seed = resolve_seed(seed_opt, err);
  const Trace tr = run(net, seed, horizon);
  if (!trace_path.empty()) {
    Output dst(trace_path, out);
    write_trace_ndjson(dst.os(), tr);
  }
  std::ostream& summary = trace_path == "-" ? err : out;
  summary << "events: " << tr.entries.size() << "\nend_time: " << tr.end_time
          << "\nterminal: " << to_string(tr.terminal);
  if (!tr.detail.empty()) summary << " (" << tr.detail << ")";
  summary << "\n";
  const std::string prop = !prop_flag.empty() ? prop_flag : l.dep.property;
  if (!prop.empty()) {
    const BoundProperty p = bind(parse_property(prop), net);
    summary << "verdict: " << (eval(p, tr) ? "true" : "false") << "\n";
  }
  return kExitOk;
}

int cmd_check(const ModelInput& in, const SmcOptions& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load(in, err);
  const std::string prop = property_text(o.prop, o.prop_file, l.dep);
  const MtlFormula f = parse_property(prop);
  const SmcConfig cfg = make_config(o, err);
  const Network net = instantiate(l.doc, l.dep);
  const BoundProperty bp = bind(f, net);
  std::vector<SweepPoint> pts{{"-", estimate(net, bp, cfg)}};
  warn_faults(pts, err);
  report(o, pts, prop, cfg, out);
  return kExitOk;
}

int cmd_sweep(const ModelInput& in, const std::string& param, const SmcOptions& o, std::ostream& out,
              std::ostream& err) {
  const auto eq = param.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--param expects name=v1,v2,...");
  const Loaded l = load(in, err);
  const std::string prop = property_text(o.prop, o.prop_file, l.dep);
  const MtlFormula f = parse_property(prop);
  SweepSpec spec;
  spec.parameter = param.substr(0, eq);
  spec.values = split_values(param.substr(eq + 1));
  spec.config = make_config(o, err);
  const auto pts = sweep(l.doc, l.dep, f, spec);
  warn_faults(pts, err);
  report(o, pts, prop, spec.config, out);
  return kExitOk;
}

struct GenOptions {
  std::string scenario;
  std::string out_dir = ".";
  std::string name;
  double move_rate = 0;
  int robots = 9;
  std::optional<int> start_cell;
  std::optional<double> start_temp;
  int uavs = 4;
  int stations = 4;
  std::string protocol = "bluetooth";
  std::optional<int> distance;
  std::optional<int> buildings;
  std::optional<int> area;
  std::optional<int> victims;
  std::optional<std::uint64_t> city_seed;
};

int cmd_gen(const GenOptions& g, std::ostream& out) {
  Scenario sc;
  try {
    if (g.scenario == "flag") {
      CaptureFlagSpec spec;
      if (g.move_rate > 0) spec.move_rate = g.move_rate;
      sc = gen_capture_flag(spec);
    } else if (g.scenario == "honeybee") {
      GridSpec grid;
      BeeStart start;
      if (g.start_cell) start.cell = *g.start_cell;
      if (g.start_temp) start.cell = cell_near_temperature(grid, *g.start_temp);
      sc = gen_honeybee(grid, g.robots, start);
    } else {
      CitySpec spec;
      if (g.buildings) spec.buildings = *g.buildings;
      if (g.area) spec.area = *g.area;
      if (g.victims) spec.victims = *g.victims;
      if (g.city_seed) spec.seed = *g.city_seed;
      sc = gen_city(spec, g.uavs, g.stations, g.protocol == "zigbee" ? Protocol::ZigBee : Protocol::Bluetooth,
                    g.distance);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string name = g.name.empty() ? g.scenario : g.name;
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  const fs::path model = fs::path(g.out_dir) / (name + ".cpss");
  const fs::path dep = fs::path(g.out_dir) / (name + ".toml");
  for (const auto& [path, text] : {std::pair{model, &sc.model_text}, std::pair{dep, &sc.deployment_text}}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    os << *text;
  }
  out << model.string() << "\n" << dep.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical model checker for cyber-physical space systems", "cpssv"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  ModelInput in;
  auto model_args = [&in](CLI::App* sub) {
    sub->add_option("model", in.model, "Model file (.cpss)")->required();
    sub->add_option("--deploy,-d", in.deploy, "Deployment file (default: model path with .toml)");
  };

  auto* validate = app.add_subcommand("validate", "Parse and check a model");
  model_args(validate);

  std::string weave_class, weave_out;
  bool weave_dot = false;
  auto* weave_cmd = app.add_subcommand("weave", "Print the composed automaton of each class");
  model_args(weave_cmd);
  weave_cmd->add_option("--class", weave_class, "Only this class");
  weave_cmd->add_flag("--dot", weave_dot, "Graphviz output");
  weave_cmd->add_option("--out,-o", weave_out, "Output file");

  std::optional<std::uint64_t> sim_seed;
  double sim_horizon = -1.0;
  std::string sim_trace, sim_prop;
  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  model_args(simulate);
  simulate->add_option("--seed", sim_seed, "Run seed (random and printed when absent)");
  simulate->add_option("--horizon", sim_horizon, "Override the deployment horizon");
  simulate->add_option("--trace", sim_trace, "Write the trace as NDJSON to this file ('-': stdout)");
  simulate->add_option("--prop", sim_prop, "Also report the verdict of this property");

  SmcOptions smc_opts;
  auto* check = app.add_subcommand("check", "Estimate the probability of a property");
  model_args(check);
  add_smc_options(check, smc_opts);

  std::string sweep_param;
  auto* sweep_cmd = app.add_subcommand("sweep", "Estimate over a range of one parameter");
  model_args(sweep_cmd);
  sweep_cmd->add_option("--param", sweep_param, "name=v1,v2,... (class count, constant or distance)")->required();
  add_smc_options(sweep_cmd, smc_opts);

  GenOptions gen_opts;
  auto* gen = app.add_subcommand("gen", "Write a case-study model and deployment");
  gen->add_option("scenario", gen_opts.scenario, "flag | honeybee | city")
      ->required()
      ->check(CLI::IsMember({"flag", "honeybee", "city"}));
  gen->add_option("--out-dir", gen_opts.out_dir, "Directory for <name>.cpss and <name>.toml");
  gen->add_option("--name", gen_opts.name, "Base file name (default: the scenario)");
  gen->add_option("--move-rate", gen_opts.move_rate, "flag: rate of room-to-room moves");
  gen->add_option("--robots", gen_opts.robots, "honeybee: swarm size");
  auto* sc = gen->add_option("--start-cell", gen_opts.start_cell, "honeybee: common start cell");
  gen->add_option("--start-temp", gen_opts.start_temp, "honeybee: start at the cell nearest this temperature")
      ->excludes(sc);
  gen->add_option("--uavs", gen_opts.uavs, "city: number of UAVs");
  gen->add_option("--stations", gen_opts.stations, "city: number of charging stations");
  gen->add_option("--protocol", gen_opts.protocol, "city: bluetooth | zigbee")
      ->check(CLI::IsMember({"bluetooth", "zigbee"}));
  gen->add_option("--distance", gen_opts.distance, "city: start UAVs this many hops from the victims");
  gen->add_option("--buildings", gen_opts.buildings, "city: number of locations");
  gen->add_option("--area", gen_opts.area, "city: keep only the nearest locations");
  gen->add_option("--victims", gen_opts.victims, "city: number of victims");
  gen->add_option("--city-seed", gen_opts.city_seed, "city: layout seed");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(in, out, err);
    if (*weave_cmd) return cmd_weave(in, weave_class, weave_dot, weave_out, out, err);
    if (*simulate) return cmd_simulate(in, sim_seed, sim_horizon, sim_trace, sim_prop, out, err);
    if (*check) return cmd_check(in, smc_opts, out, err);
    if (*sweep_cmd) return cmd_sweep(in, sweep_param, smc_opts, out, err);
    if (*gen) return cmd_gen(gen_opts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    print_parse_error(err, e);
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace cpssv
