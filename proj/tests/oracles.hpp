#pragma once

// Independent reference implementations and random generators shared by the unit tests
// and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpssv/monitor.hpp"
#include "cpssv/random.hpp"
#include "cpssv/script.hpp"
#include "cpssv/sta.hpp"

namespace oracle {

using namespace cpssv;

// ---------------------------------------------------------------------------
// Expressions

struct Value {
  ScalarType type = ScalarType::Int;
  std::int64_t i = 0;
  double r = 0.0;
  bool b = false;

  double num() const { return type == ScalarType::Real ? r : static_cast<double>(i); }
};

struct RefEnv {
  std::map<std::string, Value> scalars;
  std::map<std::string, std::vector<Value>> arrays;
  std::int64_t self_pos = -1;
  double now = 0.0;
};

/// Tree-walking evaluation straight from the AST. nullopt: evaluation fault.
inline std::optional<Value> ref_eval(const Expr& e, const RefEnv& env) {
  using K = ExprNode::Kind;
  switch (e->kind) {
    case K::IntLit: return Value{ScalarType::Int, e->int_value};
    case K::RealLit: return Value{ScalarType::Real, 0, e->real_value};
    case K::BoolLit: return Value{ScalarType::Bool, 0, 0.0, e->bool_value};
    case K::Var: {
      auto it = env.scalars.find(e->name);
      if (it == env.scalars.end()) return std::nullopt;
      return it->second;
    }
    case K::Index: {
      auto it = env.arrays.find(e->name);
      auto k = ref_eval(e->args[0], env);
      if (it == env.arrays.end() || !k) return std::nullopt;
      if (k->i < 0 || k->i >= static_cast<std::int64_t>(it->second.size())) return std::nullopt;
      return it->second[k->i];
    }
    case K::Call:
      if (e->name == "self_pos") return Value{ScalarType::Int, env.self_pos};
      if (e->name == "now") return Value{ScalarType::Real, 0, env.now};
      return std::nullopt;
    case K::Member: return std::nullopt;
    case K::Unary: {
      auto x = ref_eval(e->args[0], env);
      if (!x) return std::nullopt;
      if (e->unary_op == UnaryOp::Not) return Value{ScalarType::Bool, 0, 0.0, !x->b};
      if (x->type == ScalarType::Real) return Value{ScalarType::Real, 0, -x->r};
      if (x->i == std::numeric_limits<std::int64_t>::min()) return std::nullopt;
      return Value{ScalarType::Int, -x->i};
    }
    case K::Binary: break;
  }
  const BinaryOp op = e->binary_op;
  auto x = ref_eval(e->args[0], env);
  if (!x) return std::nullopt;
  if (op == BinaryOp::And && !x->b) return Value{ScalarType::Bool, 0, 0.0, false};
  if (op == BinaryOp::Or && x->b) return Value{ScalarType::Bool, 0, 0.0, true};
  auto y = ref_eval(e->args[1], env);
  if (!y) return std::nullopt;
  auto boolean = [](bool v) { return Value{ScalarType::Bool, 0, 0.0, v}; };
  if (op == BinaryOp::And || op == BinaryOp::Or) return boolean(y->b);
  const bool real = x->type == ScalarType::Real || y->type == ScalarType::Real;
  if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
    bool eq = x->type == ScalarType::Bool ? x->b == y->b : real ? x->num() == y->num() : x->i == y->i;
    return boolean(op == BinaryOp::Eq ? eq : !eq);
  }
  if (op == BinaryOp::Lt || op == BinaryOp::Le || op == BinaryOp::Gt || op == BinaryOp::Ge) {
    const int c = real ? (x->num() < y->num() ? -1 : x->num() > y->num() ? 1 : 0) : (x->i < y->i ? -1 : x->i > y->i ? 1 : 0);
    switch (op) {
      case BinaryOp::Lt: return boolean(c < 0);
      case BinaryOp::Le: return boolean(c <= 0);
      case BinaryOp::Gt: return boolean(c > 0);
      default: return boolean(c >= 0);
    }
  }
  if (real) {
    const double a = x->num(), b = y->num();
    switch (op) {
      case BinaryOp::Add: return Value{ScalarType::Real, 0, a + b};
      case BinaryOp::Sub: return Value{ScalarType::Real, 0, a - b};
      case BinaryOp::Mul: return Value{ScalarType::Real, 0, a * b};
      case BinaryOp::Div:
        if (b == 0.0) return std::nullopt;
        return Value{ScalarType::Real, 0, a / b};
      default: return std::nullopt;
    }
  }
  const std::int64_t a = x->i, b = y->i;
  std::int64_t r = 0;
  switch (op) {
    case BinaryOp::Add:
      if (__builtin_add_overflow(a, b, &r)) return std::nullopt;
      return Value{ScalarType::Int, r};
    case BinaryOp::Sub:
      if (__builtin_sub_overflow(a, b, &r)) return std::nullopt;
      return Value{ScalarType::Int, r};
    case BinaryOp::Mul:
      if (__builtin_mul_overflow(a, b, &r)) return std::nullopt;
      return Value{ScalarType::Int, r};
    case BinaryOp::Div:
    case BinaryOp::Mod:
      if (b == 0 || (a == std::numeric_limits<std::int64_t>::min() && b == -1)) return std::nullopt;
      return Value{ScalarType::Int, op == BinaryOp::Div ? a / b : a % b};
    default: return std::nullopt;
  }
}

/// Well-typed closed expression of the requested type, depth <= `depth`.
inline Expr random_expr(RandomStream& rng, int depth, ScalarType type) {
  const bool leaf = depth <= 0 || rng.below(4) == 0;
  if (type == ScalarType::Bool) {
    if (leaf) return bool_lit(rng.below(2) == 1);
    switch (rng.below(4)) {
      case 0: return unary(UnaryOp::Not, random_expr(rng, depth - 1, ScalarType::Bool));
      case 1:
        return binary(rng.below(2) ? BinaryOp::And : BinaryOp::Or, random_expr(rng, depth - 1, ScalarType::Bool),
                      random_expr(rng, depth - 1, ScalarType::Bool));
      default: {
        static constexpr BinaryOp cmp[] = {BinaryOp::Eq, BinaryOp::Ne, BinaryOp::Lt,
                                           BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge};
        const ScalarType a = rng.below(3) ? ScalarType::Int : ScalarType::Real;
        const ScalarType b = rng.below(3) ? ScalarType::Int : ScalarType::Real;
        return binary(cmp[rng.below(6)], random_expr(rng, depth - 1, a), random_expr(rng, depth - 1, b));
      }
    }
  }
  if (leaf) {
    if (type == ScalarType::Int) return int_lit(static_cast<std::int64_t>(rng.below(21)) - 10);
    return real_lit((static_cast<double>(rng.below(41)) - 20.0) / 4.0);
  }
  if (rng.below(6) == 0) return unary(UnaryOp::Neg, random_expr(rng, depth - 1, type));
  if (type == ScalarType::Int) {
    static constexpr BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Mod};
    return binary(ops[rng.below(5)], random_expr(rng, depth - 1, ScalarType::Int),
                  random_expr(rng, depth - 1, ScalarType::Int));
  }
  static constexpr BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div};
  // Real result: at least one operand real.
  const bool left_real = rng.below(2) == 1;
  return binary(ops[rng.below(4)], random_expr(rng, depth - 1, left_real ? ScalarType::Real : ScalarType::Int),
                random_expr(rng, depth - 1, left_real && rng.below(2) ? ScalarType::Int : ScalarType::Real));
}

// ---------------------------------------------------------------------------
// MTL

/// Recursive definition, position by position. Strong finite semantics.
inline bool holds(const Mtl& f, std::size_t i, const std::vector<double>& t, const std::vector<std::vector<char>>& v) {
  using K = MtlNode::Kind;
  switch (f->kind) {
    case K::True: return true;
    case K::False: return false;
    case K::Atom: return v[i][f->atom] != 0;
    case K::Not: return !holds(f->lhs, i, t, v);
    case K::And: return holds(f->lhs, i, t, v) && holds(f->rhs, i, t, v);
    case K::Or: return holds(f->lhs, i, t, v) || holds(f->rhs, i, t, v);
    case K::Next: return i + 1 < t.size() && holds(f->lhs, i + 1, t, v);
    case K::Until:
      for (std::size_t j = i; j < t.size(); ++j) {
        if (t[j] - t[i] > f->bound) return false;
        if (holds(f->rhs, j, t, v)) return true;
        if (!holds(f->lhs, j, t, v)) return false;
      }
      return false;
  }
  return false;
}

inline double random_bound(RandomStream& rng) {
  static constexpr double bounds[] = {0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0};
  if (rng.below(3) == 0) return std::numeric_limits<double>::infinity();
  return bounds[rng.below(7)];
}

/// Random formula of depth <= `depth` over atoms 0..atoms-1, using derived operators too.
inline Mtl random_formula(RandomStream& rng, int depth, std::uint32_t atoms) {
  if (depth <= 0 || rng.below(5) == 0) {
    const auto k = rng.below(atoms + 2);
    if (k == atoms) return mtl_true();
    if (k == atoms + 1) return mtl_false();
    return mtl_atom(static_cast<std::uint32_t>(k));
  }
  switch (rng.below(8)) {
    case 0: return mtl_not(random_formula(rng, depth - 1, atoms));
    case 1: return mtl_and(random_formula(rng, depth - 1, atoms), random_formula(rng, depth - 1, atoms));
    case 2: return mtl_or(random_formula(rng, depth - 1, atoms), random_formula(rng, depth - 1, atoms));
    case 3: return mtl_next(random_formula(rng, depth - 1, atoms));
    case 4: return mtl_eventually(random_formula(rng, depth - 1, atoms), random_bound(rng));
    case 5: return mtl_always(random_formula(rng, depth - 1, atoms), random_bound(rng));
    default:
      return mtl_until(random_formula(rng, depth - 1, atoms), random_formula(rng, depth - 1, atoms),
                       random_bound(rng));
  }
}

inline MtlFormula make_formula(Mtl root, std::uint32_t atoms) {
  MtlFormula f;
  f.root = std::move(root);
  for (std::uint32_t a = 0; a < atoms; ++a) f.atoms.push_back(var("p" + std::to_string(a)));
  return f;
}

struct Word {
  std::vector<double> times;
  std::vector<std::vector<char>> valuation;
};

/// Nondecreasing times with repeated timestamps, random atom values.
inline Word random_word(RandomStream& rng, std::size_t length, std::uint32_t atoms) {
  static constexpr double steps[] = {0.0, 0.25, 0.5, 1.0, 1.0, 1.5, 2.0};
  Word w;
  double t = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    if (i) t += steps[rng.below(7)];
    w.times.push_back(t);
    std::vector<char> v(atoms);
    for (auto& x : v) x = static_cast<char>(rng.below(2));
    w.valuation.push_back(std::move(v));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Random concern automata for the weaving laws

struct Triple {
  Sta spatial;
  std::vector<PredicateState> predicates;
  Sta interaction;
};

inline Triple random_triple(RandomStream& rng) {
  Triple t;
  t.spatial.role = StaRole::Spatial;
  const int np = 1 + static_cast<int>(rng.below(8));
  for (int i = 0; i < np; ++i) t.spatial.states.push_back(StaState{"S" + std::to_string(i), Exponential{1.0}});
  t.spatial.initial = "S" + std::to_string(rng.below(np));
  for (int i = 0; i < np; ++i) {
    // One or two guard groups per state, each split over 1..3 targets.
    const int groups = 1 + static_cast<int>(rng.below(2));
    for (int g = 0; g < groups; ++g) {
      const int m = 1 + static_cast<int>(rng.below(3));
      Expr guard = g == 0 ? Expr{} : binary(BinaryOp::Ge, var("x"), int_lit(static_cast<std::int64_t>(rng.below(3))));
      for (int k = 0; k < m; ++k) {
        StaTransition tr;
        tr.source = "S" + std::to_string(i);
        tr.target = "S" + std::to_string(rng.below(np));
        tr.guard = guard;
        tr.prob = 1.0 / m;
        t.spatial.transitions.push_back(tr);
      }
    }
  }
  const int nr = static_cast<int>(rng.below(4));
  for (int i = 0; i < nr; ++i) {
    PredicateState p;
    p.id = "F" + std::to_string(i);
    p.kind = rng.below(2) ? PredicateKind::Success : PredicateKind::Failure;
    p.guard = binary(BinaryOp::Eq, var("x"), int_lit(10 + i));
    t.predicates.push_back(p);
  }
  t.interaction.role = StaRole::Interaction;
  const int ni = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < ni; ++i) t.interaction.states.push_back(StaState{"I" + std::to_string(i), Deterministic{0.0}});
  t.interaction.initial = "I0";
  t.interaction.entry = "I0";
  t.interaction.exit = "I" + std::to_string(ni - 1);
  // Forward chain, optionally with skips; acyclic by construction.
  for (int i = 0; i + 1 < ni; ++i) {
    const bool skip = i + 2 < ni && rng.below(2);
    StaTransition a;
    a.source = "I" + std::to_string(i);
    a.target = "I" + std::to_string(i + 1);
    a.prob = skip ? 0.5 : 1.0;
    t.interaction.transitions.push_back(a);
    if (skip) {
      a.target = "I" + std::to_string(i + 2);
      t.interaction.transitions.push_back(a);
    }
  }
  return t;
}

}  // namespace oracle
