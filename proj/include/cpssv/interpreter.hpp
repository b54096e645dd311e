#pragma once

// Static checking, compilation and evaluation of scripts.
//
// Scripts are compiled against a SymbolTable into a flat node array with resolved storage
// slots and explicit int->real promotions. Evaluation never mutates the environment: an
// action produces a Delta (ordered writes) that the caller applies atomically.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cpssv/diagnostics.hpp"
#include "cpssv/script.hpp"

namespace cpssv {

enum class ScalarType : std::uint8_t { Int, Real, Bool };

std::string_view to_string(ScalarType t);

union Scalar {
  std::int64_t i;
  double r;
  bool b;

  constexpr Scalar() : i(0) {}
  static constexpr Scalar of_int(std::int64_t v) {
    Scalar s;
    s.i = v;
    return s;
  }
  static constexpr Scalar of_real(double v) {
    Scalar s;
    s.r = v;
    return s;
  }
  static constexpr Scalar of_bool(bool v) {
    Scalar s;
    s.i = 0;
    s.b = v;
    return s;
  }
};

bool same_value(ScalarType t, Scalar a, Scalar b);
std::string format_value(ScalarType t, Scalar v);

enum class VarScope : std::uint8_t { Global, Local };

struct Symbol {
  enum class Kind : std::uint8_t { Global, Local, Constant };
  Kind kind = Kind::Global;
  ScalarType type = ScalarType::Int;
  std::uint32_t size = 0;    // 0 for scalars, element count for arrays
  std::uint32_t offset = 0;  // first storage slot
  Scalar constant;

  bool is_array() const { return size > 0; }
  std::uint32_t width() const { return size == 0 ? 1 : size; }
};

/// Terms only available inside properties (see monitor).
struct PropertyTerm {
  enum class Kind : std::uint8_t { SystemTime, ClassPredicateCount, StateNameCount, InstanceInState };
  Kind kind = Kind::SystemTime;
  std::uint32_t a = 0;  // class id / name id / instance
  std::uint32_t b = 0;  // state index for InstanceInState
};

class PropertyResolver {
 public:
  virtual ~PropertyResolver() = default;
  virtual std::optional<PropertyTerm> term(std::string_view name) const = 0;
  /// `base.member` where base is the instance designator (e.g. robot[0] or robotA).
  virtual std::optional<PropertyTerm> member(const Expr& base, std::string_view member) const = 0;
};

/// Names visible to scripts, with storage layout. Globals and locals live in two separate
/// slot spaces.
class SymbolTable {
 public:
  std::uint32_t add_global(const std::string& name, ScalarType type, std::uint32_t array_size = 0);
  std::uint32_t add_local(const std::string& name, ScalarType type, std::uint32_t array_size = 0);
  void add_constant(const std::string& name, ScalarType type, Scalar value);
  /// State names usable as agent_count() arguments.
  void add_state_name(const std::string& name, std::uint32_t id);

  const Symbol* find(std::string_view name) const;
  std::optional<std::uint32_t> state_name(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::uint32_t global_width() const { return global_width_; }
  std::uint32_t local_width() const { return local_width_; }

  /// "name" or "name[i]" for a storage slot; used by trace export.
  std::string slot_name(VarScope scope, std::uint32_t slot) const;
  ScalarType slot_type(VarScope scope, std::uint32_t slot) const;

  const std::vector<std::string>& names() const { return order_; }

 private:
  std::uint32_t add(const std::string& name, Symbol s);

  std::unordered_map<std::string, Symbol> symbols_;
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::uint32_t> state_names_;
  std::uint32_t global_width_ = 0;
  std::uint32_t local_width_ = 0;
};

/// Raised by evaluation: out-of-bounds index, division by zero, integer overflow.
class EvalFault : public std::runtime_error {
 public:
  EvalFault(std::string message, SourceSpan span);
  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

/// Queries against the running network made by built-ins and property terms.
class WorldView {
 public:
  virtual ~WorldView() = default;
  virtual std::int64_t name_count(std::uint32_t name_id) const = 0;
  virtual std::int64_t class_predicate_count(std::uint32_t class_id) const = 0;
  virtual std::uint32_t instance_state(std::uint32_t instance) const = 0;
};

struct Write {
  VarScope scope = VarScope::Global;
  std::uint32_t slot = 0;
  Scalar value;
};

/// Ordered variable writes of one action; later writes to the same slot win.
using Delta = std::vector<Write>;

struct EvalContext {
  const Scalar* globals = nullptr;
  const Scalar* locals = nullptr;
  /// Uncommitted writes of the block being executed; reads consult them first.
  const Delta* pending = nullptr;
  double now = 0.0;
  std::int64_t self_pos = -1;
  const WorldView* world = nullptr;
};

struct CompileOptions {
  bool allow_reserved = false;  // "__"-prefixed names (weaver-generated code only)
  bool allow_self = true;       // self_pos() / agent-local variables
  const PropertyResolver* property = nullptr;
};

/// Flat compiled representation shared by expressions and blocks.
class Program {
 public:
  enum class Op : std::uint8_t {
    Const,
    LoadGlobal,
    LoadLocal,
    LoadGlobalAt,
    LoadLocalAt,
    IntToReal,
    NegI,
    NegR,
    Not,
    AddI,
    SubI,
    MulI,
    DivI,
    ModI,
    AddR,
    SubR,
    MulR,
    DivR,
    EqI,
    NeI,
    LtI,
    LeI,
    GtI,
    GeI,
    EqR,
    NeR,
    LtR,
    LeR,
    GtR,
    GeR,
    EqB,
    NeB,
    And,
    Or,
    SelfPos,
    Now,
    NameCount,
    ClassPredicateCount,
    InstanceInState,
  };

  struct Node {
    Op op = Op::Const;
    ScalarType type = ScalarType::Int;
    std::uint32_t a = 0;  // child / slot
    std::uint32_t b = 0;  // child / array size
    std::uint32_t span = 0;
    Scalar imm;
  };

  struct Statement {
    enum class Kind : std::uint8_t { Assign, If };
    Kind kind = Kind::Assign;
    VarScope scope = VarScope::Global;
    std::uint32_t slot = 0;
    std::uint32_t array_size = 0;           // 0 for scalar target
    std::int32_t index = -1;                // node of the index expression
    std::uint32_t value = 0;                // node of the value / condition
    std::vector<std::uint32_t> then_stmts;  // statement ids
    std::vector<std::uint32_t> else_stmts;
    std::uint32_t span = 0;
  };

  Scalar eval(std::uint32_t node, const EvalContext& ctx) const;
  void exec(const std::vector<std::uint32_t>& stmts, const EvalContext& ctx, Delta& out) const;

  std::vector<Node> nodes;
  std::vector<Statement> statements;
  std::vector<SourceSpan> spans;

 private:
  Scalar load(VarScope scope, std::uint32_t slot, const EvalContext& ctx) const;
  [[noreturn]] void fault(const std::string& message, std::uint32_t span) const;
};

class CompiledExpr {
 public:
  CompiledExpr() = default;
  ScalarType type() const { return type_; }
  Scalar eval(const EvalContext& ctx) const { return program_.eval(root_, ctx); }
  bool test(const EvalContext& ctx) const { return eval(ctx).b; }
  bool empty() const { return program_.nodes.empty(); }

 private:
  friend CompiledExpr compile_expr(const Expr&, const SymbolTable&, const CompileOptions&);
  Program program_;
  std::uint32_t root_ = 0;
  ScalarType type_ = ScalarType::Bool;
};

class CompiledBlock {
 public:
  bool empty() const { return top_.empty(); }
  /// Runs the block against ctx, appending writes to `out`. `ctx.pending` is managed here.
  void run(EvalContext ctx, Delta& out) const;

 private:
  friend CompiledBlock compile_block(const Block&, const SymbolTable&, const CompileOptions&);
  Program program_;
  std::vector<std::uint32_t> top_;
};

/// Type-checks and compiles. Throws ParseError ("type error: ...") with the offending span.
CompiledExpr compile_expr(const Expr& e, const SymbolTable& symbols, const CompileOptions& options = {});
CompiledBlock compile_block(const Block& b, const SymbolTable& symbols, const CompileOptions& options = {});

/// Compiles a guard: additionally requires boolean type.
CompiledExpr compile_guard(const Expr& e, const SymbolTable& symbols, const CompileOptions& options = {});

/// Static type of `e`, or a ParseError.
ScalarType check_expr(const Expr& e, const SymbolTable& symbols, const CompileOptions& options = {});

/// Self-contained variable environment for evaluating scripts outside a running network.
class VariableEnvironment {
 public:
  void declare_global(const std::string& name, ScalarType type, Scalar init);
  void declare_global_array(const std::string& name, ScalarType type, std::vector<Scalar> init);
  void declare_local(const std::string& name, ScalarType type, Scalar init);
  void declare_local_array(const std::string& name, ScalarType type, std::vector<Scalar> init);
  void declare_constant(const std::string& name, ScalarType type, Scalar value);
  void set_self_pos(std::int64_t pos) { self_pos_ = pos; }
  void set_now(double t) { now_ = t; }
  void set_state_count(const std::string& state, std::int64_t count);

  const SymbolTable& symbols() const { return symbols_; }
  EvalContext context() const;

  Scalar get(std::string_view name, std::uint32_t index = 0) const;
  std::int64_t get_int(std::string_view name, std::uint32_t index = 0) const { return get(name, index).i; }
  double get_real(std::string_view name, std::uint32_t index = 0) const { return get(name, index).r; }
  bool get_bool(std::string_view name, std::uint32_t index = 0) const { return get(name, index).b; }

  void apply(const Delta& delta);
  bool operator==(const VariableEnvironment& other) const;

 private:
  class Counts : public WorldView {
   public:
    std::int64_t name_count(std::uint32_t id) const override { return id < counts.size() ? counts[id] : 0; }
    std::int64_t class_predicate_count(std::uint32_t) const override { return 0; }
    std::uint32_t instance_state(std::uint32_t) const override { return 0; }
    std::vector<std::int64_t> counts;
  };

  SymbolTable symbols_;
  std::vector<Scalar> globals_;
  std::vector<Scalar> locals_;
  std::int64_t self_pos_ = -1;
  double now_ = 0.0;
  std::map<std::string, std::uint32_t> state_ids_;
  Counts counts_;
};

/// Evaluates a boolean guard. Pure: the environment is not modified.
bool eval_guard(const Expr& guard, const VariableEnvironment& env);

/// Executes an action block and returns its writes without applying them. A fault
/// propagates as EvalFault and leaves nothing applied.
Delta exec_action(const Block& action, const VariableEnvironment& env);

}  // namespace cpssv
