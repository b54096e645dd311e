#pragma once

// Composition of the three concern automata of an agent class into one automaton, and
// instantiation of woven classes into a runnable network.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpssv/interpreter.hpp"
#include "cpssv/model.hpp"
#include "cpssv/sta.hpp"

namespace cpssv {

/// Reserved per-instance variable recording the spatial state an excursion started from.
inline constexpr const char* kOriginVar = "__origin";
/// Name of the placeholder interaction state used when a class declares no interaction.
inline constexpr const char* kTrivialInteraction = "__interaction";

class WeaveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AgentClass {
  std::string name;
  /// States ordered: spatial, then predicate, then interaction.
  Sta composed;
  std::vector<PredicateState> predicate_states;
  Hooks hooks;
  std::vector<VarDecl> locals;  // user locals followed by the origin variable
  std::size_t spatial_count = 0;
  std::size_t predicate_count = 0;
  std::size_t interaction_count = 0;
  std::string entry;
  std::string exit;
  bool trivial_interaction = false;

  enum class Part { Spatial, Predicate, Interaction };
  Part part_of(std::size_t state) const {
    if (state < spatial_count) return Part::Spatial;
    if (state < spatial_count + predicate_count) return Part::Predicate;
    return Part::Interaction;
  }
};

/// Builds the composed automaton. `interaction` may be null (placeholder with entry = exit).
/// Throws WeaveError on role mismatch, invalid inputs, overlapping state ids, or an
/// interaction without a check_interaction hook.
AgentClass weave(const Sta& spatial, const std::vector<PredicateState>& predicates, const Sta* interaction,
                 const Hooks& hooks, std::string name = "agent", std::vector<VarDecl> locals = {});

AgentClass weave(const AgentClassDecl& decl);

/// Control-flow discipline, absorbing predicate states, zero-time interaction states and
/// normalised guard groups of a composed class.
ValidationReport validate_composed(const AgentClass& c);

/// Graphviz rendering of the composed automaton.
std::string to_dot(const AgentClass& c);

// ---------------------------------------------------------------------------
// Compiled form used by the engine

inline constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

struct CompiledTransition {
  std::uint32_t target = 0;
  double prob = 1.0;
  std::uint32_t action = kNone;  // index into CompiledClass::blocks
};

struct CompiledGroup {
  std::uint32_t guard = 0;  // index into CompiledClass::guards
  /// 0: predicate entry, 1: interaction entry, 2: ordinary move. Interaction-internal
  /// transitions use tier 0.
  std::uint8_t tier = 2;
  std::vector<CompiledTransition> transitions;
};

struct CompiledState {
  std::string id;
  AgentClass::Part part = AgentClass::Part::Spatial;
  Distribution delay = Deterministic{0.0};
  std::optional<double> cap;
  std::uint32_t name_id = kNone;  // index into Network::state_names
  std::vector<CompiledGroup> groups;  // ordered by tier
};

struct CompiledClass {
  std::string name;
  AgentClass woven;
  SymbolTable symbols;
  std::vector<CompiledState> states;
  std::uint32_t entry = 0;
  std::uint32_t exit = 0;
  /// Guard i is the conjunction of conjunct ids guards[i]; conjuncts are shared between
  /// guards so each is evaluated at most once per decision.
  std::vector<std::vector<std::uint32_t>> guards;
  std::vector<CompiledExpr> conjuncts;
  std::vector<CompiledBlock> blocks;
  CompiledBlock on_init;
  std::vector<Scalar> local_init;
  std::uint32_t origin_slot = 0;
};

struct InstanceInit {
  std::uint32_t cls = 0;
  std::uint32_t index_in_class = 0;
  /// Candidate initial spatial states with weights (a single entry for fixed placement).
  std::vector<std::pair<std::uint32_t, double>> initial;
};

struct Network {
  std::vector<std::shared_ptr<const CompiledClass>> classes;
  std::vector<InstanceInit> instances;
  std::vector<std::string> state_names;
  SymbolTable global_symbols;  // globals + constants + state names
  std::vector<Scalar> globals_init;
  double horizon = 1000.0;
  std::uint64_t max_events = 1000000;

  int class_index(std::string_view name) const;
  /// Instance id of the k-th instance of class `cls`, or -1.
  int instance_of(std::uint32_t cls, std::uint32_t k) const;
};

inline constexpr std::int64_t kMaxInstances = 1000000;

class InstantiationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weaves and compiles every class of `doc` (with the deployment's constant overrides) and
/// lays out instances and globals. Throws InstantiationError / WeaveError / ParseError.
Network instantiate(const ModelDocument& doc, const Deployment& deployment);

/// Hop distances over the spatial graph of `cls` from the given state indices.
std::vector<int> spatial_distances(const CompiledClass& cls, const std::vector<std::uint32_t>& sources);

}  // namespace cpssv
