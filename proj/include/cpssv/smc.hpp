#pragma once

// Statistical model checking: Monte Carlo estimation of P(phi) over independent runs.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cpssv/engine.hpp"
#include "cpssv/model.hpp"
#include "cpssv/monitor.hpp"

namespace cpssv {

enum class FaultPolicy { Violation, Abort };

struct SmcConfig {
  enum class Mode { FixedN, Okamoto };
  Mode mode = Mode::FixedN;
  std::uint64_t runs = 1000;
  double epsilon = 0.01;
  double delta = 0.05;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: hardware concurrency
  double horizon = -1.0;  // < 0: deployment's
  FaultPolicy fault_policy = FaultPolicy::Violation;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  std::uint64_t run_count() const;
};

/// N = ceil(ln(2/delta) / (2 eps^2)).
std::uint64_t okamoto_runs(double epsilon, double delta);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact two-sided binomial interval.
Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence);

struct RunOutcome {
  bool verdict = false;
  double decided_at = 0.0;
  TerminalReason terminal = TerminalReason::None;
  bool fault = false;
  std::string detail;
};

struct SmcResult {
  std::uint64_t k = 0;
  std::uint64_t n = 0;
  double p_hat = 0.0;
  Interval ci;
  double confidence = 0.95;
  double mean_sat_time = 0.0;  // NaN when k == 0
  double wall_ms = 0.0;
  std::uint64_t faults = 0;
  std::string first_fault;
};

class SmcAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seed of run `index` under base seed `base`.
std::uint64_t run_seed(std::uint64_t base, std::uint64_t index);

/// One run monitored online; stops as soon as the verdict is fixed.
RunOutcome check_run(const Network& net, const BoundProperty& prop, std::uint64_t seed, double horizon = -1.0,
                     std::uint64_t max_events = 0);

/// Exactly cfg.run_count() runs; deterministic in cfg regardless of worker count.
/// Throws SmcAborted under FaultPolicy::Abort.
SmcResult estimate(const Network& net, const BoundProperty& prop, const SmcConfig& cfg);
SmcResult estimate(const ModelDocument& doc, const Deployment& dep, const MtlFormula& f, const SmcConfig& cfg);

struct SweepSpec {
  /// `<class>s` or `<class>` (instance count), a constant name, or `distance`.
  std::string parameter;
  std::vector<std::string> values;
  SmcConfig config;
};

struct SweepPoint {
  std::string value;
  SmcResult result;
};

class SweepError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Applies one sweep value to copies of doc/dep. Throws SweepError if the parameter is not
/// addressable or the value does not fit it.
void apply_parameter(ModelDocument& doc, Deployment& dep, const std::string& parameter, const std::string& value);

/// Every point uses the same base seed.
std::vector<SweepPoint> sweep(const ModelDocument& doc, const Deployment& dep, const MtlFormula& f,
                              const SweepSpec& spec);

/// Fraction of `repetitions` Bernoulli(p_true) experiments of n trials whose interval
/// contains p_true.
double coverage_selftest(double p_true, std::uint64_t repetitions, std::uint64_t n = 1000, double confidence = 0.95,
                         std::uint64_t seed = 1);

// Output ---------------------------------------------------------------------

struct ReportOptions {
  bool reproducible = false;  // wall_ms written as 0
};

void write_csv(std::ostream& os, const std::vector<SweepPoint>& points, const ReportOptions& opt = {});
void write_json(std::ostream& os, const std::vector<SweepPoint>& points, const std::string& property,
                const SmcConfig& cfg, const ReportOptions& opt = {});
void write_text(std::ostream& os, const std::vector<SweepPoint>& points, const ReportOptions& opt = {});

}  // namespace cpssv
