#pragma once

#include <optional>
#include <string>
#include <variant>

#include "cpssv/random.hpp"

namespace cpssv {

struct Exponential {
  double rate = 1.0;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct Uniform {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct Deterministic {
  double value = 0.0;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};

/// Sojourn-time distribution of a state, in model time units.
using Distribution = std::variant<Exponential, Uniform, Deterministic>;

/// Empty string when the parameters are admissible, otherwise the reason.
std::string check_distribution(const Distribution& d);

double mean(const Distribution& d);

/// One draw from `d`. Exponential and Uniform consume exactly one draw of `rng`;
/// Deterministic consumes none.
double sample(const Distribution& d, RandomStream& rng);

/// Sample truncated at `cap` when present.
inline double sample_truncated(const Distribution& d, const std::optional<double>& cap, RandomStream& rng) {
  const double x = sample(d, rng);
  return cap && x > *cap ? *cap : x;
}

bool is_zero_delay(const Distribution& d);

/// Model-text form: exp(r), uniform(a, b), det(d).
std::string to_string(const Distribution& d);

}  // namespace cpssv
