#include "cpssv/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "cpssv/numfmt.hpp"

namespace cpssv {

namespace {

std::shared_ptr<MtlNode> node(MtlNode::Kind k) {
  auto n = std::make_shared<MtlNode>();
  n->kind = k;
  return n;
}

}  // namespace

Mtl mtl_true() { return node(MtlNode::Kind::True); }
Mtl mtl_false() { return node(MtlNode::Kind::False); }

Mtl mtl_atom(std::uint32_t index) {
  auto n = node(MtlNode::Kind::Atom);
  n->atom = index;
  return n;
}

Mtl mtl_not(Mtl a) {
  auto n = node(MtlNode::Kind::Not);
  n->lhs = std::move(a);
  return n;
}

Mtl mtl_and(Mtl a, Mtl b) {
  auto n = node(MtlNode::Kind::And);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

Mtl mtl_or(Mtl a, Mtl b) {
  auto n = node(MtlNode::Kind::Or);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

Mtl mtl_next(Mtl a) {
  auto n = node(MtlNode::Kind::Next);
  n->lhs = std::move(a);
  return n;
}

Mtl mtl_until(Mtl a, Mtl b, double bound) {
  auto n = node(MtlNode::Kind::Until);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->bound = bound;
  return n;
}

Mtl mtl_eventually(Mtl a, double bound) { return mtl_until(mtl_true(), std::move(a), bound); }
Mtl mtl_always(Mtl a, double bound) { return mtl_not(mtl_eventually(mtl_not(std::move(a)), bound)); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

bool continues_atom(const Token& t) {
  static const char* ops[] = {"==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%", "."};
  if (t.kind != TokenKind::Punct) return false;
  for (const char* op : ops) {
    if (t.text == op) return true;
  }
  return false;
}

class PropertyParser {
 public:
  explicit PropertyParser(std::string_view text) : cur_(tokenize(text)) {}

  MtlFormula parse() {
    if (cur_.at_end()) cur_.fail("property");
    f_.root = parse_or();
    if (!cur_.at_end()) cur_.fail("end of property");
    return std::move(f_);
  }

 private:
  Mtl parse_or() {
    TokenCursor::Depth d(cur_);
    Mtl lhs = parse_and();
    while (cur_.accept("||")) lhs = mtl_or(lhs, parse_and());
    return lhs;
  }

  Mtl parse_and() {
    TokenCursor::Depth d(cur_);
    Mtl lhs = parse_until();
    while (cur_.accept("&&")) lhs = mtl_and(lhs, parse_until());
    return lhs;
  }

  Mtl parse_until() {
    TokenCursor::Depth d(cur_);
    Mtl lhs = parse_unary();
    if (cur_.accept_ident("U")) {
      const double b = bound();
      return mtl_until(lhs, parse_until(), b);
    }
    return lhs;
  }

  double bound() {
    if (!cur_.accept("[")) return std::numeric_limits<double>::infinity();
    if (cur_.peek().kind == TokenKind::Ident) cur_.next();  // clock name, e.g. SystemTime
    cur_.expect("<=");
    const Token& at = cur_.peek();
    const double d = cur_.expect_number();
    if (d < 0) cur_.fail_at(at, "negative bound " + format_number(d));
    cur_.expect("]");
    return d;
  }

  Mtl parse_unary() {
    TokenCursor::Depth d(cur_);
    const Token& t = cur_.peek();
    if (t.is("!")) {
      cur_.next();
      return mtl_not(parse_unary());
    }
    if (t.is_ident("X")) {
      cur_.next();
      return mtl_next(parse_unary());
    }
    if (t.is_ident("F")) {
      cur_.next();
      const double b = bound();
      return mtl_eventually(parse_unary(), b);
    }
    if (t.is_ident("G")) {
      cur_.next();
      const double b = bound();
      return mtl_always(parse_unary(), b);
    }
    if (t.is("(")) {
      const std::size_t start = cur_.position();
      try {
        cur_.next();
        Mtl inner = parse_or();
        cur_.expect(")");
        if (!continues_atom(cur_.peek())) return inner;
      } catch (const ParseError&) {
        cur_.rewind(start);
        return atom();
      }
      cur_.rewind(start);
      return atom();
    }
    return atom();
  }

  Mtl atom() {
    ExprSyntax syntax;
    syntax.allow_member = true;
    syntax.min_level = 3;
    Expr e = parse_expression(cur_, syntax);
    if (e->kind == ExprNode::Kind::BoolLit) return e->bool_value ? mtl_true() : mtl_false();
    const std::string key = to_string(e);
    auto it = ids_.find(key);
    if (it == ids_.end()) {
      f_.atoms.push_back(e);
      it = ids_.emplace(key, static_cast<std::uint32_t>(f_.atoms.size() - 1)).first;
    }
    return mtl_atom(it->second);
  }

  TokenCursor cur_;
  MtlFormula f_;
  std::map<std::string, std::uint32_t> ids_;
};

void print(std::ostream& os, const MtlFormula& f, const Mtl& n) {
  auto bound = [&](double b) {
    if (std::isfinite(b)) os << "[<=" << format_number(b) << "]";
  };
  switch (n->kind) {
    case MtlNode::Kind::True: os << "true"; break;
    case MtlNode::Kind::False: os << "false"; break;
    case MtlNode::Kind::Atom: os << "(" << to_string(f.atoms[n->atom]) << ")"; break;
    case MtlNode::Kind::Not:
      os << "!";
      print(os, f, n->lhs);
      break;
    case MtlNode::Kind::Next:
      os << "X ";
      print(os, f, n->lhs);
      break;
    case MtlNode::Kind::And:
    case MtlNode::Kind::Or:
      os << "(";
      print(os, f, n->lhs);
      os << (n->kind == MtlNode::Kind::And ? " && " : " || ");
      print(os, f, n->rhs);
      os << ")";
      break;
    case MtlNode::Kind::Until:
      os << "(";
      print(os, f, n->lhs);
      os << " U";
      bound(n->bound);
      os << " ";
      print(os, f, n->rhs);
      os << ")";
      break;
  }
}

}  // namespace

MtlFormula parse_property(std::string_view text) {
  MtlFormula f = PropertyParser(text).parse();
  f.text = std::string(text);
  return f;
}

std::string to_string(const MtlFormula& f) {
  std::ostringstream os;
  print(os, f, f.root);
  return os.str();
}

// ---------------------------------------------------------------------------
// Offline evaluation

namespace {

std::vector<char> positions(const Mtl& n, const std::vector<double>& t, const std::vector<std::vector<char>>& v) {
  const std::size_t len = t.size();
  std::vector<char> out(len, 0);
  switch (n->kind) {
    case MtlNode::Kind::True:
      std::fill(out.begin(), out.end(), 1);
      break;
    case MtlNode::Kind::False:
      break;
    case MtlNode::Kind::Atom:
      for (std::size_t i = 0; i < len; ++i) out[i] = v[i][n->atom];
      break;
    case MtlNode::Kind::Not: {
      const auto a = positions(n->lhs, t, v);
      for (std::size_t i = 0; i < len; ++i) out[i] = !a[i];
      break;
    }
    case MtlNode::Kind::And:
    case MtlNode::Kind::Or: {
      const auto a = positions(n->lhs, t, v);
      const auto b = positions(n->rhs, t, v);
      const bool conj = n->kind == MtlNode::Kind::And;
      for (std::size_t i = 0; i < len; ++i) out[i] = conj ? (a[i] && b[i]) : (a[i] || b[i]);
      break;
    }
    case MtlNode::Kind::Next: {
      const auto a = positions(n->lhs, t, v);
      for (std::size_t i = 0; i + 1 < len; ++i) out[i] = a[i + 1];
      break;
    }
    case MtlNode::Kind::Until: {
      const auto a = positions(n->lhs, t, v);
      const auto b = positions(n->rhs, t, v);
      // Earliest witness of rhs and earliest failure of lhs at or after i.
      std::size_t witness = len;
      std::size_t failure = len;
      for (std::size_t k = len; k-- > 0;) {
        if (b[k]) witness = k;
        if (!a[k]) failure = k;
        out[k] = witness < len && witness <= failure && t[witness] <= t[k] + n->bound;
      }
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<char> eval_positions(const MtlFormula& f, const std::vector<double>& times,
                                 const std::vector<std::vector<char>>& valuation) {
  return positions(f.root, times, valuation);
}

bool eval_word(const MtlFormula& f, const std::vector<double>& times, const std::vector<std::vector<char>>& valuation) {
  if (times.empty()) throw std::invalid_argument("eval_word needs at least one position");
  return positions(f.root, times, valuation)[0] != 0;
}

// ---------------------------------------------------------------------------
// Binding

namespace {

class NetworkTerms : public PropertyResolver {
 public:
  explicit NetworkTerms(const Network& net) : net_(net) {}

  std::optional<PropertyTerm> term(std::string_view name) const override {
    if (name == "SystemTime") return PropertyTerm{PropertyTerm::Kind::SystemTime, 0, 0};
    auto ends = [&](std::string_view suffix) {
      return name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix;
    };
    if (ends("SFNum")) {
      const int c = net_.class_index(name.substr(0, name.size() - 5));
      if (c >= 0) return PropertyTerm{PropertyTerm::Kind::ClassPredicateCount, static_cast<std::uint32_t>(c), 0};
    }
    if (ends("Num")) {
      const std::string state(name.substr(0, name.size() - 3));
      auto it = std::lower_bound(net_.state_names.begin(), net_.state_names.end(), state);
      if (it != net_.state_names.end() && *it == state) {
        return PropertyTerm{PropertyTerm::Kind::StateNameCount, static_cast<std::uint32_t>(it - net_.state_names.begin()), 0};
      }
    }
    return std::nullopt;
  }

  std::optional<PropertyTerm> member(const Expr& base, std::string_view member) const override {
    std::string cls_name;
    std::int64_t k = 0;
    if (base->kind == ExprNode::Kind::Var) {
      cls_name = base->name;
    } else if (base->kind == ExprNode::Kind::Index && base->args[0]->kind == ExprNode::Kind::IntLit) {
      cls_name = base->name;
      k = base->args[0]->int_value;
    } else {
      return std::nullopt;
    }
    const int c = net_.class_index(cls_name);
    if (c < 0 || k < 0) return std::nullopt;
    const int inst = net_.instance_of(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(k));
    if (inst < 0) return std::nullopt;
    const auto& states = net_.classes[c]->states;
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (states[s].id == member) {
        return PropertyTerm{PropertyTerm::Kind::InstanceInState, static_cast<std::uint32_t>(inst), static_cast<std::uint32_t>(s)};
      }
    }
    return std::nullopt;
  }

 private:
  const Network& net_;
};

}  // namespace

BoundProperty bind(const MtlFormula& f, const Network& net) {
  BoundProperty p;
  p.formula_ = f;
  NetworkTerms terms(net);
  CompileOptions opt;
  opt.allow_self = false;
  opt.property = &terms;
  for (const auto& a : f.atoms) {
    CompiledExpr c = compile_expr(a, net.global_symbols, opt);
    if (c.type() != ScalarType::Bool) {
      throw ParseError("type error: proposition '" + to_string(a) + "' is " + std::string(to_string(c.type())) +
                           ", not bool",
                       a->span);
    }
    p.atoms_.push_back(std::move(c));
  }
  return p;
}

void BoundProperty::valuate(const NetworkSnapshot& snap, std::vector<char>& out) const {
  EvalContext ctx;
  ctx.globals = snap.globals.data();
  ctx.now = snap.time;
  ctx.world = &snap;
  out.resize(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) out[i] = atoms_[i].test(ctx) ? 1 : 0;
}

bool eval(const BoundProperty& p, const Trace& trace) {
  NetworkSnapshot snap = trace.initial;
  std::vector<double> times{snap.time};
  std::vector<std::vector<char>> val(1);
  p.valuate(snap, val[0]);
  for (const auto& e : trace.entries) {
    snap.time = e.time;
    snap.apply(e.writes);
    snap.move(*trace.network, e.instance, e.to);
    times.push_back(e.time);
    val.emplace_back();
    p.valuate(snap, val.back());
  }
  return eval_word(p.formula(), times, val);
}

// ---------------------------------------------------------------------------
// Progression

struct Watch::Residual {
  enum class Kind { Const, Pending, UntilAbs, Not, And, Or };
  Kind kind = Kind::Const;
  bool value = false;
  Mtl phi;                // Pending: formula due at the next position; UntilAbs: the Until node
  double deadline = 0.0;  // UntilAbs
  std::shared_ptr<const Residual> a;
  std::shared_ptr<const Residual> b;
};

namespace {

using R = std::shared_ptr<const Watch::Residual>;
using RK = Watch::Residual::Kind;

const R& constant(bool v) {
  static const R t = [] {
    auto r = std::make_shared<Watch::Residual>();
    r->kind = RK::Const;
    r->value = true;
    return R(r);
  }();
  static const R f = [] {
    auto r = std::make_shared<Watch::Residual>();
    r->kind = RK::Const;
    r->value = false;
    return R(r);
  }();
  return v ? t : f;
}

bool is_const(const R& r, bool v) { return r->kind == RK::Const && r->value == v; }

R neg(const R& a) {
  if (a->kind == RK::Const) return constant(!a->value);
  if (a->kind == RK::Not) return a->a;
  auto r = std::make_shared<Watch::Residual>();
  r->kind = RK::Not;
  r->a = a;
  return r;
}

R combine(RK kind, const R& a, const R& b) {
  const bool conj = kind == RK::And;
  if (is_const(a, !conj) || is_const(b, !conj)) return constant(!conj);
  if (is_const(a, conj)) return b;
  if (is_const(b, conj)) return a;
  auto r = std::make_shared<Watch::Residual>();
  r->kind = kind;
  r->a = a;
  r->b = b;
  return r;
}

R pending(const Mtl& phi) {
  auto r = std::make_shared<Watch::Residual>();
  r->kind = RK::Pending;
  r->phi = phi;
  return r;
}

R until_step(const Mtl& u, double deadline, const R& self, double t, const std::vector<char>& val);

R expand(const Mtl& n, double t, const std::vector<char>& val) {
  switch (n->kind) {
    case MtlNode::Kind::True: return constant(true);
    case MtlNode::Kind::False: return constant(false);
    case MtlNode::Kind::Atom: return constant(val[n->atom] != 0);
    case MtlNode::Kind::Not: return neg(expand(n->lhs, t, val));
    case MtlNode::Kind::And:
    case MtlNode::Kind::Or: {
      const RK k = n->kind == MtlNode::Kind::And ? RK::And : RK::Or;
      R a = expand(n->lhs, t, val);
      if (is_const(a, k == RK::Or)) return a;
      return combine(k, a, expand(n->rhs, t, val));
    }
    case MtlNode::Kind::Next: return pending(n->lhs);
    case MtlNode::Kind::Until: return until_step(n, t + n->bound, nullptr, t, val);
  }
  return constant(false);
}

R until_step(const Mtl& u, double deadline, const R& self, double t, const std::vector<char>& val) {
  if (t > deadline) return constant(false);
  R now = expand(u->rhs, t, val);
  if (is_const(now, true)) return now;
  R hold = expand(u->lhs, t, val);
  if (is_const(hold, false)) return now;
  R rest = self;
  if (!rest) {
    auto r = std::make_shared<Watch::Residual>();
    r->kind = RK::UntilAbs;
    r->phi = u;
    r->deadline = deadline;
    rest = r;
  }
  return combine(RK::Or, now, combine(RK::And, hold, rest));
}

R progress(const R& r, double t, const std::vector<char>& val) {
  switch (r->kind) {
    case RK::Const: return r;
    case RK::Pending: return expand(r->phi, t, val);
    case RK::UntilAbs: return until_step(r->phi, r->deadline, r, t, val);
    case RK::Not: return neg(progress(r->a, t, val));
    case RK::And:
    case RK::Or: {
      R a = progress(r->a, t, val);
      R b = progress(r->b, t, val);
      if (a == r->a && b == r->b) return r;
      return combine(r->kind, a, b);
    }
  }
  return r;
}

R expire_at(const R& r, double t) {
  switch (r->kind) {
    case RK::Const:
    case RK::Pending: return r;
    case RK::UntilAbs: return r->deadline < t ? constant(false) : r;
    case RK::Not: {
      R a = expire_at(r->a, t);
      return a == r->a ? r : neg(a);
    }
    case RK::And:
    case RK::Or: {
      R a = expire_at(r->a, t);
      R b = expire_at(r->b, t);
      if (a == r->a && b == r->b) return r;
      return combine(r->kind, a, b);
    }
  }
  return r;
}

bool finalize(const R& r) {
  switch (r->kind) {
    case RK::Const: return r->value;
    case RK::Pending:
    case RK::UntilAbs: return false;
    case RK::Not: return !finalize(r->a);
    case RK::And: return finalize(r->a) && finalize(r->b);
    case RK::Or: return finalize(r->a) || finalize(r->b);
  }
  return false;
}

}  // namespace

Watch::Watch(const MtlFormula& f) : state_(pending(f.root)) {}
Watch::~Watch() = default;
Watch::Watch(Watch&&) noexcept = default;
Watch& Watch::operator=(Watch&&) noexcept = default;

std::optional<bool> Watch::observe(double time, const std::vector<char>& valuation) {
  if (verdict_) return verdict_;
  last_time_ = time;
  state_ = progress(state_, time, valuation);
  if (state_->kind == RK::Const) {
    verdict_ = state_->value;
    decided_at_ = time;
  }
  return verdict_;
}

std::optional<bool> Watch::expire(double t) {
  if (verdict_) return verdict_;
  state_ = expire_at(state_, t);
  if (state_->kind == RK::Const) {
    verdict_ = state_->value;
    decided_at_ = last_time_;
  }
  return verdict_;
}

bool Watch::finish() {
  if (!verdict_) {
    verdict_ = finalize(state_);
    decided_at_ = last_time_;
  }
  return *verdict_;
}

}  // namespace cpssv
