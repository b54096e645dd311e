#include "cpssv/distribution.hpp"

#include <cmath>

#include "cpssv/numfmt.hpp"

namespace cpssv {

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

std::string check_distribution(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const Exponential& e) -> std::string {
                          if (!(e.rate > 0.0) || !std::isfinite(e.rate)) return "exponential rate must be > 0";
                          return {};
                        },
                        [](const Uniform& u) -> std::string {
                          if (!(u.lo >= 0.0) || !(u.hi >= u.lo) || !std::isfinite(u.hi))
                            return "uniform bounds must satisfy 0 <= lo <= hi";
                          return {};
                        },
                        [](const Deterministic& c) -> std::string {
                          if (!(c.value >= 0.0) || !std::isfinite(c.value)) return "deterministic delay must be >= 0";
                          return {};
                        },
                    },
                    d);
}

double mean(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
                        [](const Deterministic& c) { return c.value; },
                    },
                    d);
}

double sample(const Distribution& d, RandomStream& rng) {
  return std::visit(Overloaded{
                        // 1 - u lies in (0, 1], so the log is finite.
                        [&](const Exponential& e) { return -std::log1p(-rng.uniform01()) / e.rate; },
                        [&](const Uniform& u) { return u.lo + (u.hi - u.lo) * rng.uniform01(); },
                        [](const Deterministic& c) { return c.value; },
                    },
                    d);
}

bool is_zero_delay(const Distribution& d) {
  const auto* c = std::get_if<Deterministic>(&d);
  return c != nullptr && c->value == 0.0;
}

std::string to_string(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return "exp(" + format_number(e.rate) + ")"; },
                        [](const Uniform& u) {
                          return "uniform(" + format_number(u.lo) + ", " + format_number(u.hi) + ")";
                        },
                        [](const Deterministic& c) { return "det(" + format_number(c.value) + ")"; },
                    },
                    d);
}

}  // namespace cpssv
