#pragma once

// Model documents (.cpss) and deployment files: data types, parser and serializer.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpssv/diagnostics.hpp"
#include "cpssv/interpreter.hpp"
#include "cpssv/sta.hpp"

namespace cpssv {

struct VarDecl {
  std::string name;
  ScalarType type = ScalarType::Int;
  std::uint32_t size = 0;     // 0 = scalar
  std::vector<Scalar> init;   // width() values, or empty for all-zero
  SourceSpan span;

  std::uint32_t width() const { return size == 0 ? 1 : size; }
  Scalar initial(std::uint32_t k) const { return k < init.size() ? init[k] : Scalar{}; }
};

struct ConstDecl {
  std::string name;
  ScalarType type = ScalarType::Int;
  Scalar value;
  SourceSpan span;
};

struct Hooks {
  Block on_move;
  Expr check_interaction;  // null: not declared
  Block on_interaction_entry;
  Block on_interaction_exit;
  Block on_init;
};

struct AgentClassDecl {
  std::string name;
  std::vector<VarDecl> locals;
  Sta spatial;
  std::optional<Sta> interaction;
  std::vector<PredicateState> predicates;
  Hooks hooks;
  SourceSpan span;
};

struct ModelDocument {
  std::vector<ConstDecl> constants;
  std::vector<VarDecl> globals;
  std::vector<AgentClassDecl> classes;

  const AgentClassDecl* find_class(std::string_view name) const;
};

/// Parses a model. Syntax, duplicate-name and script type errors throw ParseError with all
/// collected diagnostics.
ModelDocument parse_model(std::string_view text, std::string file_name = {});

/// Structural and type checks of a parsed document (per-automaton validation, name
/// resolution of scripts). Never throws.
ValidationReport validate_model(const ModelDocument& doc);

/// Deterministic canonical text; parse_model(serialize_model(d)) is structurally equal to d.
std::string serialize_model(const ModelDocument& doc);

/// Equality ignoring source spans.
bool structurally_equal(const ModelDocument& a, const ModelDocument& b);

/// Symbol table of globals and constants (optionally also the locals of one class) with
/// state names of all classes registered for agent_count().
SymbolTable build_symbols(const ModelDocument& doc, const AgentClassDecl* cls);

/// Sorted unique state names over all classes: the ids used by agent_count() and `<State>Num`.
std::vector<std::string> state_name_universe(const ModelDocument& doc);

// ---------------------------------------------------------------------------
// Deployment

/// Literal value of a deployment override (scalar or array).
struct ConfigValue {
  ScalarType type = ScalarType::Int;
  std::vector<Scalar> items;
  bool array = false;

  friend bool operator==(const ConfigValue& a, const ConfigValue& b);
};

std::string to_string(const ConfigValue& v);

struct InstanceSpec {
  std::string cls;
  std::int64_t count = 0;
  /// Explicit initial states: one per instance, or a single entry for all of them.
  std::vector<std::string> initial;
  /// Categorical distribution over initial states (used when `initial` is empty).
  std::vector<std::pair<std::string, double>> initial_dist;
  /// Place instances uniformly at the states exactly `distance` hops from the initial
  /// support of class `near`.
  std::optional<std::string> near;
  std::int64_t distance = 0;
};

struct Deployment {
  double horizon = 1000.0;
  std::uint64_t max_events = 1000000;
  std::string property;
  std::vector<InstanceSpec> instances;
  std::map<std::string, ConfigValue> globals;
  std::map<std::string, ConfigValue> constants;

  InstanceSpec* find(std::string_view cls);
  const InstanceSpec* find(std::string_view cls) const;
};

/// TOML subset: top-level keys, [instances.<class>], [globals], [constants] tables.
Deployment parse_deployment(std::string_view text, std::string file_name = {});
std::string serialize_deployment(const Deployment& d);

/// Applies constant overrides of a deployment to a document copy.
ModelDocument apply_constants(const ModelDocument& doc, const Deployment& dep);

std::string read_file(const std::string& path);

}  // namespace cpssv
