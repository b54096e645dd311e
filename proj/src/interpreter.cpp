#include "cpssv/interpreter.hpp"

#include <cstring>
#include <limits>

#include "cpssv/numfmt.hpp"

namespace cpssv {

std::string_view to_string(ScalarType t) {
  switch (t) {
    case ScalarType::Int: return "int";
    case ScalarType::Real: return "real";
    case ScalarType::Bool: return "bool";
  }
  return "?";
}

bool same_value(ScalarType t, Scalar a, Scalar b) {
  switch (t) {
    case ScalarType::Int: return a.i == b.i;
    case ScalarType::Real: return a.r == b.r;
    case ScalarType::Bool: return a.b == b.b;
  }
  return false;
}

std::string format_value(ScalarType t, Scalar v) {
  switch (t) {
    case ScalarType::Int: return std::to_string(v.i);
    case ScalarType::Real: return format_real(v.r);
    case ScalarType::Bool: return v.b ? "true" : "false";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// SymbolTable

std::uint32_t SymbolTable::add(const std::string& name, Symbol s) {
  if (symbols_.count(name) != 0) throw std::invalid_argument("duplicate symbol '" + name + "'");
  order_.push_back(name);
  symbols_.emplace(name, s);
  return s.offset;
}

std::uint32_t SymbolTable::add_global(const std::string& name, ScalarType type, std::uint32_t array_size) {
  Symbol s;
  s.kind = Symbol::Kind::Global;
  s.type = type;
  s.size = array_size;
  s.offset = global_width_;
  add(name, s);
  global_width_ += s.width();
  return s.offset;
}

std::uint32_t SymbolTable::add_local(const std::string& name, ScalarType type, std::uint32_t array_size) {
  Symbol s;
  s.kind = Symbol::Kind::Local;
  s.type = type;
  s.size = array_size;
  s.offset = local_width_;
  add(name, s);
  local_width_ += s.width();
  return s.offset;
}

void SymbolTable::add_constant(const std::string& name, ScalarType type, Scalar value) {
  Symbol s;
  s.kind = Symbol::Kind::Constant;
  s.type = type;
  s.constant = value;
  add(name, s);
}

void SymbolTable::add_state_name(const std::string& name, std::uint32_t id) { state_names_[name] = id; }

const Symbol* SymbolTable::find(std::string_view name) const {
  auto it = symbols_.find(std::string(name));
  return it == symbols_.end() ? nullptr : &it->second;
}

std::optional<std::uint32_t> SymbolTable::state_name(std::string_view name) const {
  auto it = state_names_.find(std::string(name));
  if (it == state_names_.end()) return std::nullopt;
  return it->second;
}

std::string SymbolTable::slot_name(VarScope scope, std::uint32_t slot) const {
  const auto want = scope == VarScope::Global ? Symbol::Kind::Global : Symbol::Kind::Local;
  for (const auto& name : order_) {
    const Symbol& s = symbols_.at(name);
    if (s.kind != want || slot < s.offset || slot >= s.offset + s.width()) continue;
    return s.is_array() ? name + "[" + std::to_string(slot - s.offset) + "]" : name;
  }
  return "?" + std::to_string(slot);
}

ScalarType SymbolTable::slot_type(VarScope scope, std::uint32_t slot) const {
  const auto want = scope == VarScope::Global ? Symbol::Kind::Global : Symbol::Kind::Local;
  for (const auto& [name, s] : symbols_) {
    if (s.kind == want && slot >= s.offset && slot < s.offset + s.width()) return s.type;
  }
  return ScalarType::Int;
}

EvalFault::EvalFault(std::string message, SourceSpan span)
    : std::runtime_error(span.str() + ": " + message), span_(std::move(span)) {}

// ---------------------------------------------------------------------------
// Evaluation

Scalar Program::load(VarScope scope, std::uint32_t slot, const EvalContext& ctx) const {
  if (ctx.pending != nullptr) {
    for (auto it = ctx.pending->rbegin(); it != ctx.pending->rend(); ++it) {
      if (it->slot == slot && it->scope == scope) return it->value;
    }
  }
  return scope == VarScope::Global ? ctx.globals[slot] : ctx.locals[slot];
}

void Program::fault(const std::string& message, std::uint32_t span) const {
  throw EvalFault(message, span < spans.size() ? spans[span] : SourceSpan{});
}

Scalar Program::eval(std::uint32_t id, const EvalContext& ctx) const {
  const Node& n = nodes[id];
  using S = Scalar;
  switch (n.op) {
    case Op::Const:
      return n.imm;
    case Op::LoadGlobal:
      return load(VarScope::Global, n.a, ctx);
    case Op::LoadLocal:
      return load(VarScope::Local, n.a, ctx);
    case Op::LoadGlobalAt:
    case Op::LoadLocalAt: {
      const std::int64_t k = eval(n.a, ctx).i;
      if (k < 0 || k >= static_cast<std::int64_t>(n.b)) {
        fault("array index " + std::to_string(k) + " out of bounds [0, " + std::to_string(n.b) + ")", n.span);
      }
      const auto slot = static_cast<std::uint32_t>(n.imm.i + k);
      return load(n.op == Op::LoadGlobalAt ? VarScope::Global : VarScope::Local, slot, ctx);
    }
    case Op::IntToReal:
      return S::of_real(static_cast<double>(eval(n.a, ctx).i));
    case Op::NegI: {
      const std::int64_t v = eval(n.a, ctx).i;
      if (v == std::numeric_limits<std::int64_t>::min()) fault("integer overflow", n.span);
      return S::of_int(-v);
    }
    case Op::NegR:
      return S::of_real(-eval(n.a, ctx).r);
    case Op::Not:
      return S::of_bool(!eval(n.a, ctx).b);
    case Op::AddI:
    case Op::SubI:
    case Op::MulI: {
      const std::int64_t x = eval(n.a, ctx).i;
      const std::int64_t y = eval(n.b, ctx).i;
      std::int64_t r = 0;
      bool overflow = false;
      if (n.op == Op::AddI) overflow = __builtin_add_overflow(x, y, &r);
      else if (n.op == Op::SubI) overflow = __builtin_sub_overflow(x, y, &r);
      else overflow = __builtin_mul_overflow(x, y, &r);
      if (overflow) fault("integer overflow", n.span);
      return S::of_int(r);
    }
    case Op::DivI:
    case Op::ModI: {
      const std::int64_t x = eval(n.a, ctx).i;
      const std::int64_t y = eval(n.b, ctx).i;
      if (y == 0) fault("division by zero", n.span);
      if (x == std::numeric_limits<std::int64_t>::min() && y == -1) fault("integer overflow", n.span);
      return S::of_int(n.op == Op::DivI ? x / y : x % y);
    }
    case Op::AddR:
      return S::of_real(eval(n.a, ctx).r + eval(n.b, ctx).r);
    case Op::SubR:
      return S::of_real(eval(n.a, ctx).r - eval(n.b, ctx).r);
    case Op::MulR:
      return S::of_real(eval(n.a, ctx).r * eval(n.b, ctx).r);
    case Op::DivR: {
      const double x = eval(n.a, ctx).r;
      const double y = eval(n.b, ctx).r;
      if (y == 0.0) fault("division by zero", n.span);
      return S::of_real(x / y);
    }
    case Op::EqI: return S::of_bool(eval(n.a, ctx).i == eval(n.b, ctx).i);
    case Op::NeI: return S::of_bool(eval(n.a, ctx).i != eval(n.b, ctx).i);
    case Op::LtI: return S::of_bool(eval(n.a, ctx).i < eval(n.b, ctx).i);
    case Op::LeI: return S::of_bool(eval(n.a, ctx).i <= eval(n.b, ctx).i);
    case Op::GtI: return S::of_bool(eval(n.a, ctx).i > eval(n.b, ctx).i);
    case Op::GeI: return S::of_bool(eval(n.a, ctx).i >= eval(n.b, ctx).i);
    case Op::EqR: return S::of_bool(eval(n.a, ctx).r == eval(n.b, ctx).r);
    case Op::NeR: return S::of_bool(eval(n.a, ctx).r != eval(n.b, ctx).r);
    case Op::LtR: return S::of_bool(eval(n.a, ctx).r < eval(n.b, ctx).r);
    case Op::LeR: return S::of_bool(eval(n.a, ctx).r <= eval(n.b, ctx).r);
    case Op::GtR: return S::of_bool(eval(n.a, ctx).r > eval(n.b, ctx).r);
    case Op::GeR: return S::of_bool(eval(n.a, ctx).r >= eval(n.b, ctx).r);
    case Op::EqB: return S::of_bool(eval(n.a, ctx).b == eval(n.b, ctx).b);
    case Op::NeB: return S::of_bool(eval(n.a, ctx).b != eval(n.b, ctx).b);
    case Op::And: return S::of_bool(eval(n.a, ctx).b && eval(n.b, ctx).b);
    case Op::Or: return S::of_bool(eval(n.a, ctx).b || eval(n.b, ctx).b);
    case Op::SelfPos: return S::of_int(ctx.self_pos);
    case Op::Now: return S::of_real(ctx.now);
    case Op::NameCount: return S::of_int(ctx.world ? ctx.world->name_count(n.a) : 0);
    case Op::ClassPredicateCount: return S::of_int(ctx.world ? ctx.world->class_predicate_count(n.a) : 0);
    case Op::InstanceInState: return S::of_bool(ctx.world && ctx.world->instance_state(n.a) == n.b);
  }
  return S{};
}

void Program::exec(const std::vector<std::uint32_t>& stmts, const EvalContext& ctx, Delta& out) const {
  for (const std::uint32_t id : stmts) {
    const Statement& s = statements[id];
    if (s.kind == Statement::Kind::If) {
      exec(eval(s.value, ctx).b ? s.then_stmts : s.else_stmts, ctx, out);
      continue;
    }
    std::uint32_t slot = s.slot;
    if (s.index >= 0) {
      const std::int64_t k = eval(static_cast<std::uint32_t>(s.index), ctx).i;
      if (k < 0 || k >= static_cast<std::int64_t>(s.array_size)) {
        fault("array index " + std::to_string(k) + " out of bounds [0, " + std::to_string(s.array_size) + ")", s.span);
      }
      slot += static_cast<std::uint32_t>(k);
    }
    const Scalar v = eval(s.value, ctx);
    out.push_back({s.scope, slot, v});
  }
}

void CompiledBlock::run(EvalContext ctx, Delta& out) const {
  ctx.pending = &out;
  program_.exec(top_, ctx, out);
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

using Op = Program::Op;

class Compiler {
 public:
  Compiler(const SymbolTable& symbols, const CompileOptions& options, Program& program)
      : sym_(symbols), opt_(options), p_(program) {}

  struct Typed {
    std::uint32_t node;
    ScalarType type;
  };

  Typed expr(const Expr& e) {
    switch (e->kind) {
      case ExprNode::Kind::IntLit:
        return constant(ScalarType::Int, Scalar::of_int(e->int_value), e->span);
      case ExprNode::Kind::RealLit:
        return constant(ScalarType::Real, Scalar::of_real(e->real_value), e->span);
      case ExprNode::Kind::BoolLit:
        return constant(ScalarType::Bool, Scalar::of_bool(e->bool_value), e->span);
      case ExprNode::Kind::Var:
        return variable(e);
      case ExprNode::Kind::Index:
        return indexed(e);
      case ExprNode::Kind::Call:
        return builtin(e);
      case ExprNode::Kind::Member:
        return member_term(e);
      case ExprNode::Kind::Unary:
        return unary_op(e);
      case ExprNode::Kind::Binary:
        return binary_op(e);
    }
    error("unsupported expression", e->span);
  }

  std::uint32_t statement(const Stmt& s) {
    Program::Statement out;
    out.span = span_id(s->span);
    if (s->kind == StmtNode::Kind::If) {
      out.kind = Program::Statement::Kind::If;
      const Typed c = expr(s->condition);
      if (c.type != ScalarType::Bool) error("type error: if condition must be bool, found " + std::string(to_string(c.type)), s->condition->span);
      out.value = c.node;
      for (const auto& t : s->then_block) out.then_stmts.push_back(statement(t));
      for (const auto& t : s->else_block) out.else_stmts.push_back(statement(t));
      p_.statements.push_back(std::move(out));
      return static_cast<std::uint32_t>(p_.statements.size() - 1);
    }
    check_name(s->target, s->span);
    const Symbol* sym = sym_.find(s->target);
    if (sym == nullptr) error("undefined variable '" + s->target + "'", s->span);
    if (sym->kind == Symbol::Kind::Constant) error("cannot assign to constant '" + s->target + "'", s->span);
    if (sym->kind == Symbol::Kind::Local && !opt_.allow_self) error("agent-local variable '" + s->target + "' not available here", s->span);
    out.kind = Program::Statement::Kind::Assign;
    out.scope = sym->kind == Symbol::Kind::Global ? VarScope::Global : VarScope::Local;
    out.slot = sym->offset;
    if (sym->is_array()) {
      if (!s->index) error("type error: array '" + s->target + "' assigned without index", s->span);
      const Typed k = expr(s->index);
      if (k.type != ScalarType::Int) error("type error: array index must be int", s->index->span);
      out.index = static_cast<std::int32_t>(k.node);
      out.array_size = sym->size;
    } else if (s->index) {
      error("type error: '" + s->target + "' is not an array", s->span);
    }
    Typed v = expr(s->value);
    if (sym->type == ScalarType::Real && v.type == ScalarType::Int) v = promote(v);
    if (v.type != sym->type) {
      error("type error: cannot assign " + std::string(to_string(v.type)) + " to " + std::string(to_string(sym->type)) +
                " variable '" + s->target + "'",
            s->value->span);
    }
    out.value = v.node;
    p_.statements.push_back(std::move(out));
    return static_cast<std::uint32_t>(p_.statements.size() - 1);
  }

  [[noreturn]] void error(const std::string& message, const SourceSpan& span) const { throw ParseError(message, span); }

 private:
  std::uint32_t span_id(const SourceSpan& span) {
    p_.spans.push_back(span);
    return static_cast<std::uint32_t>(p_.spans.size() - 1);
  }

  std::uint32_t emit(Program::Node n) {
    p_.nodes.push_back(n);
    return static_cast<std::uint32_t>(p_.nodes.size() - 1);
  }

  Typed constant(ScalarType t, Scalar v, const SourceSpan& span) {
    Program::Node n;
    n.op = Op::Const;
    n.type = t;
    n.imm = v;
    n.span = span_id(span);
    return {emit(n), t};
  }

  Typed promote(Typed t) {
    if (t.type != ScalarType::Int) return t;
    const Program::Node& inner = p_.nodes[t.node];
    if (inner.op == Op::Const) {
      Program::Node n = inner;
      n.type = ScalarType::Real;
      n.imm = Scalar::of_real(static_cast<double>(inner.imm.i));
      return {emit(n), ScalarType::Real};
    }
    Program::Node n;
    n.op = Op::IntToReal;
    n.type = ScalarType::Real;
    n.a = t.node;
    n.span = inner.span;
    return {emit(n), ScalarType::Real};
  }

  void check_name(const std::string& name, const SourceSpan& span) const {
    if (is_reserved_name(name) && !opt_.allow_reserved) error("reserved identifier '" + name + "'", span);
  }

  Typed variable(const Expr& e) {
    check_name(e->name, e->span);
    const Symbol* sym = sym_.find(e->name);
    if (sym == nullptr) {
      if (opt_.property != nullptr) {
        if (auto term = opt_.property->term(e->name)) return property_term(*term, e->span);
      }
      error((opt_.property ? "unknown proposition '" : "undefined variable '") + e->name + "'", e->span);
    }
    if (sym->is_array()) error("type error: array '" + e->name + "' used without index", e->span);
    if (sym->kind == Symbol::Kind::Constant) return constant(sym->type, sym->constant, e->span);
    if (sym->kind == Symbol::Kind::Local && !opt_.allow_self) error("agent-local variable '" + e->name + "' not available here", e->span);
    Program::Node n;
    n.op = sym->kind == Symbol::Kind::Global ? Op::LoadGlobal : Op::LoadLocal;
    n.type = sym->type;
    n.a = sym->offset;
    n.span = span_id(e->span);
    return {emit(n), sym->type};
  }

  Typed indexed(const Expr& e) {
    check_name(e->name, e->span);
    const Symbol* sym = sym_.find(e->name);
    if (sym == nullptr) error((opt_.property ? "unknown proposition '" : "undefined variable '") + e->name + "'", e->span);
    if (!sym->is_array()) error("type error: '" + e->name + "' is not an array", e->span);
    if (sym->kind == Symbol::Kind::Local && !opt_.allow_self) error("agent-local variable '" + e->name + "' not available here", e->span);
    const Typed k = expr(e->args[0]);
    if (k.type != ScalarType::Int) error("type error: array index must be int", e->args[0]->span);
    Program::Node n;
    n.op = sym->kind == Symbol::Kind::Global ? Op::LoadGlobalAt : Op::LoadLocalAt;
    n.type = sym->type;
    n.a = k.node;
    n.b = sym->size;
    n.imm = Scalar::of_int(sym->offset);
    n.span = span_id(e->span);
    return {emit(n), sym->type};
  }

  Typed builtin(const Expr& e) {
    Program::Node n;
    n.span = span_id(e->span);
    if (e->name == "self_pos") {
      if (!e->args.empty()) error("self_pos() takes no arguments", e->span);
      if (!opt_.allow_self) error("self_pos() not available here", e->span);
      n.op = Op::SelfPos;
      n.type = ScalarType::Int;
    } else if (e->name == "now") {
      if (!e->args.empty()) error("now() takes no arguments", e->span);
      n.op = Op::Now;
      n.type = ScalarType::Real;
    } else if (e->name == "agent_count") {
      if (e->args.size() != 1 || e->args[0]->kind != ExprNode::Kind::Var) {
        error("agent_count() takes one state name", e->span);
      }
      auto id = sym_.state_name(e->args[0]->name);
      if (!id) error("unknown state '" + e->args[0]->name + "' in agent_count()", e->args[0]->span);
      n.op = Op::NameCount;
      n.type = ScalarType::Int;
      n.a = *id;
    } else {
      error("unknown function '" + e->name + "'", e->span);
    }
    return {emit(n), n.type};
  }

  Typed property_term(const PropertyTerm& t, const SourceSpan& span) {
    Program::Node n;
    n.span = span_id(span);
    n.a = t.a;
    n.b = t.b;
    switch (t.kind) {
      case PropertyTerm::Kind::SystemTime:
        n.op = Op::Now;
        n.type = ScalarType::Real;
        break;
      case PropertyTerm::Kind::ClassPredicateCount:
        n.op = Op::ClassPredicateCount;
        n.type = ScalarType::Int;
        break;
      case PropertyTerm::Kind::StateNameCount:
        n.op = Op::NameCount;
        n.type = ScalarType::Int;
        break;
      case PropertyTerm::Kind::InstanceInState:
        n.op = Op::InstanceInState;
        n.type = ScalarType::Bool;
        break;
    }
    return {emit(n), n.type};
  }

  Typed member_term(const Expr& e) {
    if (opt_.property == nullptr) error("member access is only allowed in properties", e->span);
    auto t = opt_.property->member(e->args[0], e->name);
    if (!t) error("unknown proposition '" + to_string(e) + "'", e->span);
    return property_term(*t, e->span);
  }

  Typed unary_op(const Expr& e) {
    const Typed x = expr(e->args[0]);
    Program::Node n;
    n.a = x.node;
    n.span = span_id(e->span);
    if (e->unary_op == UnaryOp::Not) {
      if (x.type != ScalarType::Bool) error("type error: '!' needs bool, found " + std::string(to_string(x.type)), e->span);
      n.op = Op::Not;
      n.type = ScalarType::Bool;
    } else {
      if (x.type == ScalarType::Bool) error("type error: unary '-' needs a number", e->span);
      n.op = x.type == ScalarType::Int ? Op::NegI : Op::NegR;
      n.type = x.type;
    }
    return {emit(n), n.type};
  }

  Typed binary_op(const Expr& e) {
    Typed x = expr(e->args[0]);
    Typed y = expr(e->args[1]);
    const BinaryOp op = e->binary_op;
    Program::Node n;
    n.span = span_id(e->span);
    auto numeric = [&]() {
      if (x.type == ScalarType::Bool || y.type == ScalarType::Bool) {
        error("type error: operands of arithmetic or ordering must be numbers", e->span);
      }
      if (x.type == ScalarType::Real || y.type == ScalarType::Real) {
        x = promote(x);
        y = promote(y);
        return false;
      }
      return true;
    };
    switch (op) {
      case BinaryOp::And:
      case BinaryOp::Or:
        if (x.type != ScalarType::Bool || y.type != ScalarType::Bool) error("type error: '&&'/'||' need bool operands", e->span);
        n.op = op == BinaryOp::And ? Op::And : Op::Or;
        n.type = ScalarType::Bool;
        break;
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div: {
        const bool ints = numeric();
        static constexpr Op int_ops[] = {Op::AddI, Op::SubI, Op::MulI, Op::DivI};
        static constexpr Op real_ops[] = {Op::AddR, Op::SubR, Op::MulR, Op::DivR};
        const int k = op == BinaryOp::Add ? 0 : op == BinaryOp::Sub ? 1 : op == BinaryOp::Mul ? 2 : 3;
        n.op = ints ? int_ops[k] : real_ops[k];
        n.type = ints ? ScalarType::Int : ScalarType::Real;
        break;
      }
      case BinaryOp::Mod:
        if (x.type != ScalarType::Int || y.type != ScalarType::Int) error("type error: '%' needs int operands", e->span);
        n.op = Op::ModI;
        n.type = ScalarType::Int;
        break;
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        n.type = ScalarType::Bool;
        if (x.type == ScalarType::Bool || y.type == ScalarType::Bool) {
          if (x.type != y.type) error("type error: cannot compare bool with number", e->span);
          n.op = op == BinaryOp::Eq ? Op::EqB : Op::NeB;
        } else if (numeric()) {
          n.op = op == BinaryOp::Eq ? Op::EqI : Op::NeI;
        } else {
          n.op = op == BinaryOp::Eq ? Op::EqR : Op::NeR;
        }
        break;
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge: {
        const bool ints = numeric();
        static constexpr Op int_ops[] = {Op::LtI, Op::LeI, Op::GtI, Op::GeI};
        static constexpr Op real_ops[] = {Op::LtR, Op::LeR, Op::GtR, Op::GeR};
        const int k = op == BinaryOp::Lt ? 0 : op == BinaryOp::Le ? 1 : op == BinaryOp::Gt ? 2 : 3;
        n.op = ints ? int_ops[k] : real_ops[k];
        n.type = ScalarType::Bool;
        break;
      }
    }
    n.a = x.node;
    n.b = y.node;
    return {emit(n), n.type};
  }

  const SymbolTable& sym_;
  const CompileOptions& opt_;
  Program& p_;
};

}  // namespace

CompiledExpr compile_expr(const Expr& e, const SymbolTable& symbols, const CompileOptions& options) {
  CompiledExpr out;
  Compiler c(symbols, options, out.program_);
  const Expr src = e ? e : bool_lit(true);
  const auto t = c.expr(src);
  out.root_ = t.node;
  out.type_ = t.type;
  return out;
}

CompiledExpr compile_guard(const Expr& e, const SymbolTable& symbols, const CompileOptions& options) {
  CompiledExpr out = compile_expr(e, symbols, options);
  if (out.type() != ScalarType::Bool) {
    throw ParseError("type error: guard must be bool, found " + std::string(to_string(out.type())),
                     e ? e->span : SourceSpan{});
  }
  return out;
}

ScalarType check_expr(const Expr& e, const SymbolTable& symbols, const CompileOptions& options) {
  return compile_expr(e, symbols, options).type();
}

CompiledBlock compile_block(const Block& b, const SymbolTable& symbols, const CompileOptions& options) {
  CompiledBlock out;
  Compiler c(symbols, options, out.program_);
  for (const auto& s : b) out.top_.push_back(c.statement(s));
  return out;
}

// ---------------------------------------------------------------------------
// VariableEnvironment

void VariableEnvironment::declare_global(const std::string& name, ScalarType type, Scalar init) {
  symbols_.add_global(name, type);
  globals_.push_back(init);
}

void VariableEnvironment::declare_global_array(const std::string& name, ScalarType type, std::vector<Scalar> init) {
  symbols_.add_global(name, type, static_cast<std::uint32_t>(init.size()));
  globals_.insert(globals_.end(), init.begin(), init.end());
}

void VariableEnvironment::declare_local(const std::string& name, ScalarType type, Scalar init) {
  symbols_.add_local(name, type);
  locals_.push_back(init);
}

void VariableEnvironment::declare_local_array(const std::string& name, ScalarType type, std::vector<Scalar> init) {
  symbols_.add_local(name, type, static_cast<std::uint32_t>(init.size()));
  locals_.insert(locals_.end(), init.begin(), init.end());
}

void VariableEnvironment::declare_constant(const std::string& name, ScalarType type, Scalar value) {
  symbols_.add_constant(name, type, value);
}

void VariableEnvironment::set_state_count(const std::string& state, std::int64_t count) {
  auto it = state_ids_.find(state);
  if (it == state_ids_.end()) {
    const auto id = static_cast<std::uint32_t>(state_ids_.size());
    it = state_ids_.emplace(state, id).first;
    symbols_.add_state_name(state, id);
    counts_.counts.resize(id + 1, 0);
  }
  counts_.counts[it->second] = count;
}

EvalContext VariableEnvironment::context() const {
  EvalContext ctx;
  ctx.globals = globals_.data();
  ctx.locals = locals_.data();
  ctx.now = now_;
  ctx.self_pos = self_pos_;
  ctx.world = &counts_;
  return ctx;
}

Scalar VariableEnvironment::get(std::string_view name, std::uint32_t index) const {
  const Symbol* s = symbols_.find(name);
  if (s == nullptr) throw std::out_of_range("no variable '" + std::string(name) + "'");
  if (s->kind == Symbol::Kind::Constant) return s->constant;
  if (index >= s->width()) throw std::out_of_range("index out of range for '" + std::string(name) + "'");
  return s->kind == Symbol::Kind::Global ? globals_[s->offset + index] : locals_[s->offset + index];
}

void VariableEnvironment::apply(const Delta& delta) {
  for (const Write& w : delta) (w.scope == VarScope::Global ? globals_ : locals_)[w.slot] = w.value;
}

bool VariableEnvironment::operator==(const VariableEnvironment& other) const {
  auto bits_equal = [](const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(Scalar)) == 0);
  };
  return bits_equal(globals_, other.globals_) && bits_equal(locals_, other.locals_) && self_pos_ == other.self_pos_ &&
         now_ == other.now_;
}

bool eval_guard(const Expr& guard, const VariableEnvironment& env) {
  const CompiledExpr c = compile_guard(guard, env.symbols());
  return c.test(env.context());
}

Delta exec_action(const Block& action, const VariableEnvironment& env) {
  const CompiledBlock c = compile_block(action, env.symbols());
  Delta out;
  c.run(env.context(), out);
  return out;
}

}  // namespace cpssv
