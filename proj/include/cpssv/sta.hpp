#pragma once

// Stochastic timed automata: states with sojourn distributions, guarded probabilistic
// transitions, and the roles a concern model can play.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpssv/diagnostics.hpp"
#include "cpssv/distribution.hpp"
#include "cpssv/random.hpp"
#include "cpssv/script.hpp"

namespace cpssv {

enum class StaRole { Spatial, Interaction, PredicateSet, Composed };

std::string_view to_string(StaRole r);

struct StaState {
  std::string id;
  Distribution delay = Deterministic{0.0};
  /// Maximum sojourn; samples above it are truncated.
  std::optional<double> cap;
  std::vector<std::string> labels;
  /// Interaction state whose nonzero delay is intended (suppresses the zero-time warning).
  bool timed = false;
  SourceSpan span;
};

struct StaTransition {
  std::string source;
  std::string target;
  Expr guard;  // null means `true`
  double prob = 1.0;
  Block action;
  SourceSpan span;
};

enum class PredicateKind { Success, Failure };

struct PredicateState {
  std::string id;
  PredicateKind kind = PredicateKind::Failure;
  Expr guard;  // null means `false`
  Block on_enter;
  SourceSpan span;
};

struct Sta {
  StaRole role = StaRole::Spatial;
  std::vector<StaState> states;
  std::string initial;
  std::vector<StaTransition> transitions;
  std::vector<std::string> clocks;
  std::optional<std::string> entry;  // interaction only
  std::optional<std::string> exit;   // interaction only

  /// Index of the state called `id`, or -1.
  int index_of(std::string_view id) const;
};

/// Text used to group transitions that share a guard ("true" for an absent guard).
std::string guard_key(const Expr& guard);

/// Well-formedness: unique ids, endpoints and initial state exist, admissible
/// distributions and caps, probabilities in (0,1] summing to 1 per (source, guard) group,
/// and for interaction automata: entry/exit present, acyclic, exit reachable, no dead ends.
/// Unreachable states yield warnings.
ValidationReport validate_sta(const Sta& sta);

/// One sojourn for `state`, truncated at its cap. Draw count as for `sample`.
double sample_delay(const StaState& state, RandomStream& rng);

}  // namespace cpssv
