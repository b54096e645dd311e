#include "cpssv/smc.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/distributions/beta.hpp>
#include <json.hpp>

#include "cpssv/numfmt.hpp"

namespace cpssv {

void SmcConfig::validate() const {
  if (mode == Mode::FixedN && runs < 1) throw std::invalid_argument("run count must be at least 1");
  if (mode == Mode::Okamoto) {
    if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence must lie in (0, 1)");
}

std::uint64_t SmcConfig::run_count() const { return mode == Mode::FixedN ? runs : okamoto_runs(epsilon, delta); }

std::uint64_t okamoto_runs(double epsilon, double delta) {
  return static_cast<std::uint64_t>(std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon)));
}

Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence) {
  if (n == 0) return {0.0, 1.0};
  const double alpha = 1.0 - confidence;
  Interval ci;
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  ci.lo = k == 0 ? 0.0 : boost::math::quantile(boost::math::beta_distribution<double>(kd, nd - kd + 1), alpha / 2);
  ci.hi = k == n ? 1.0 : boost::math::quantile(boost::math::beta_distribution<double>(kd + 1, nd - kd), 1 - alpha / 2);
  return ci;
}

std::uint64_t run_seed(std::uint64_t base, std::uint64_t index) { return RandomStream::derive(base, index).key(); }

RunOutcome check_run(const Network& net, const BoundProperty& prop, std::uint64_t seed, double horizon,
                     std::uint64_t max_events) {
  RunOutcome out;
  RunState rs = init_run(net, seed, horizon, max_events);
  Watch watch(prop.formula());
  std::vector<char> val;
  try {
    prop.valuate(rs.snapshot(), val);
    watch.observe(rs.clock(), val);
    while (!watch.verdict() && !rs.done()) {
      if (auto t = rs.next_time(); t && watch.expire(*t)) break;
      if (!step(rs)) break;
      prop.valuate(rs.snapshot(), val);
      watch.observe(rs.clock(), val);
    }
  } catch (const EvalFault& f) {
    rs.stop(TerminalReason::Fault);
    out.fault = true;
    out.detail = std::string("property: ") + f.what();
  }
  if (rs.terminal() == TerminalReason::Fault) {
    out.fault = true;
    if (out.detail.empty()) out.detail = rs.detail();
    out.terminal = TerminalReason::Fault;
    return out;
  }
  out.verdict = watch.finish();
  out.decided_at = watch.decided_at();
  if (!rs.done()) rs.stop(TerminalReason::Decided);
  out.terminal = rs.terminal();
  return out;
}

SmcResult estimate(const Network& net, const BoundProperty& prop, const SmcConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t n = cfg.run_count();
  std::vector<RunOutcome> outcomes(n);

  unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    try {
      for (std::uint64_t i; !abort && (i = next.fetch_add(1)) < n;) {
        outcomes[i] = check_run(net, prop, run_seed(cfg.seed, i), cfg.horizon);
        if (outcomes[i].fault && cfg.fault_policy == FaultPolicy::Abort) abort = true;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      abort = true;
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  SmcResult r;
  r.n = n;
  r.confidence = cfg.confidence;
  double time_sum = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const RunOutcome& o = outcomes[i];
    if (o.fault) {
      if (cfg.fault_policy == FaultPolicy::Abort) {
        throw SmcAborted("run " + std::to_string(i) + " faulted: " + o.detail);
      }
      if (r.faults++ == 0) r.first_fault = "run " + std::to_string(i) + ": " + o.detail;
    }
    if (o.verdict) {
      ++r.k;
      time_sum += o.decided_at;
    }
  }
  r.p_hat = static_cast<double>(r.k) / static_cast<double>(n);
  r.ci = clopper_pearson(r.k, n, cfg.confidence);
  r.ci.lo = std::min(r.ci.lo, r.p_hat);
  r.ci.hi = std::max(r.ci.hi, r.p_hat);
  r.mean_sat_time = r.k ? time_sum / static_cast<double>(r.k) : std::numeric_limits<double>::quiet_NaN();
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SmcResult estimate(const ModelDocument& doc, const Deployment& dep, const MtlFormula& f, const SmcConfig& cfg) {
  const Network net = instantiate(doc, dep);
  const BoundProperty prop = bind(f, net);
  return estimate(net, prop, cfg);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

std::int64_t parse_int(const std::string& parameter, const std::string& text) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw SweepError("value '" + text + "' of parameter '" + parameter + "' is not an integer");
  }
  return v;
}

Scalar parse_scalar(const std::string& parameter, const std::string& text, ScalarType type) {
  switch (type) {
    case ScalarType::Int: return Scalar::of_int(parse_int(parameter, text));
    case ScalarType::Bool:
      if (text == "true") return Scalar::of_bool(true);
      if (text == "false") return Scalar::of_bool(false);
      throw SweepError("value '" + text + "' of parameter '" + parameter + "' is not a boolean");
    case ScalarType::Real: {
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) {
        throw SweepError("value '" + text + "' of parameter '" + parameter + "' is not a number");
      }
      return Scalar::of_real(v);
    }
  }
  return {};
}

}  // namespace

void apply_parameter(ModelDocument& doc, Deployment& dep, const std::string& parameter, const std::string& value) {
  (void)doc;
  if (parameter == "distance") {
    for (auto& spec : dep.instances) {
      if (spec.near) {
        const std::int64_t d = parse_int(parameter, value);
        if (d < 0) throw SweepError("distance must be non-negative");
        spec.distance = d;
        return;
      }
    }
    throw SweepError("parameter 'distance' needs an instance group placed near another class");
  }
  for (const auto& c : doc.constants) {
    if (c.name == parameter) {
      ConfigValue v;
      v.type = c.type;
      v.items.push_back(parse_scalar(parameter, value, c.type));
      dep.constants[parameter] = v;
      return;
    }
  }
  std::string cls = parameter;
  if (!doc.find_class(cls) && cls.size() > 1 && cls.back() == 's') cls.pop_back();
  if (doc.find_class(cls)) {
    const std::int64_t count = parse_int(parameter, value);
    if (count < 0) throw SweepError("instance count must be non-negative");
    InstanceSpec* spec = dep.find(cls);
    if (!spec) {
      dep.instances.push_back(InstanceSpec{});
      spec = &dep.instances.back();
      spec->cls = cls;
    }
    if (spec->initial.size() > 1) {
      throw SweepError("cannot resize '" + cls + "': deployment lists one initial state per instance");
    }
    spec->count = count;
    return;
  }
  throw SweepError("parameter '" + parameter + "' is neither a class, a constant nor 'distance'");
}

std::vector<SweepPoint> sweep(const ModelDocument& doc, const Deployment& dep, const MtlFormula& f,
                              const SweepSpec& spec) {
  if (spec.values.empty()) throw SweepError("sweep needs at least one value");
  std::vector<SweepPoint> out;
  for (const auto& v : spec.values) {
    ModelDocument d = doc;
    Deployment p = dep;
    apply_parameter(d, p, spec.parameter, v);
    out.push_back(SweepPoint{v, estimate(d, p, f, spec.config)});
  }
  return out;
}

double coverage_selftest(double p_true, std::uint64_t repetitions, std::uint64_t n, double confidence,
                         std::uint64_t seed) {
  if (repetitions == 0) return 1.0;
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < repetitions; ++r) {
    RandomStream rng = RandomStream::derive(seed, r);
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i) k += rng.uniform01() < p_true;
    const Interval ci = clopper_pearson(k, n, confidence);
    hits += ci.lo <= p_true && p_true <= ci.hi;
  }
  return static_cast<double>(hits) / static_cast<double>(repetitions);
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

double wall(const SmcResult& r, const ReportOptions& opt) { return opt.reproducible ? 0.0 : std::round(r.wall_ms); }

}  // namespace

void write_csv(std::ostream& os, const std::vector<SweepPoint>& points, const ReportOptions& opt) {
  os << "param,k,N,p_hat,ci_lo,ci_hi,mean_sat_time,wall_ms\n";
  for (const auto& p : points) {
    const SmcResult& r = p.result;
    os << csv_field(p.value) << ',' << r.k << ',' << r.n << ',' << fixed(r.p_hat) << ',' << fixed(r.ci.lo) << ','
       << fixed(r.ci.hi) << ',' << fixed(r.mean_sat_time, 4) << ',' << fixed(wall(r, opt), 0) << '\n';
  }
}

void write_json(std::ostream& os, const std::vector<SweepPoint>& points, const std::string& property,
                const SmcConfig& cfg, const ReportOptions& opt) {
  nlohmann::ordered_json doc;
  doc["property"] = property;
  doc["seed"] = cfg.seed;
  doc["confidence"] = cfg.confidence;
  doc["results"] = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    const SmcResult& r = p.result;
    nlohmann::ordered_json j;
    j["param"] = p.value;
    j["k"] = r.k;
    j["N"] = r.n;
    j["p_hat"] = r.p_hat;
    j["ci_lo"] = r.ci.lo;
    j["ci_hi"] = r.ci.hi;
    j["mean_sat_time"] = std::isnan(r.mean_sat_time) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.mean_sat_time);
    j["wall_ms"] = wall(r, opt);
    j["faults"] = r.faults;
    doc["results"].push_back(std::move(j));
  }
  os << doc.dump(2) << '\n';
}

void write_text(std::ostream& os, const std::vector<SweepPoint>& points, const ReportOptions& opt) {
  for (const auto& p : points) {
    const SmcResult& r = p.result;
    if (!p.value.empty()) os << p.value << ": ";
    os << "p = " << fixed(r.p_hat, 4) << "  " << format_number(r.confidence * 100) << "% CI [" << fixed(r.ci.lo, 4)
       << ", " << fixed(r.ci.hi, 4) << "]  k=" << r.k << " N=" << r.n;
    if (!std::isnan(r.mean_sat_time)) os << "  mean time to satisfaction " << fixed(r.mean_sat_time, 3);
    if (r.faults) os << "  faults=" << r.faults;
    if (!opt.reproducible) os << "  (" << fixed(r.wall_ms, 0) << " ms)";
    os << '\n';
  }
}

}  // namespace cpssv
