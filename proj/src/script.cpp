#include "cpssv/script.hpp"

#include <array>
#include <sstream>

#include "cpssv/numfmt.hpp"

namespace cpssv {

namespace {

constexpr std::array<std::string_view, 32> kKeywords = {
    "agentclass", "globals", "const",    "locals",      "spatial", "interaction", "predicates",
    "hooks",      "state",   "delay",    "cap",         "labels",  "on",          "guard",
    "prob",       "do",      "entry",    "exit",        "success", "failure",     "when",
    "if",         "else",    "true",     "false",       "int",     "real",        "bool",
    "initial",    "timed",   "on_move",  "check_interaction"};

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or:
      return 1;
    case BinaryOp::And:
      return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
      return 3;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub:
      return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod:
      return 6;
  }
  return 0;
}

constexpr int kUnaryPrecedence = 7;

std::string_view op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return "||";
    case BinaryOp::And: return "&&";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
  }
  return "?";
}

bool binary_op_for(const Token& t, int level, BinaryOp& out) {
  if (t.kind != TokenKind::Punct) return false;
  static const std::array<std::pair<std::string_view, BinaryOp>, 13> table = {{
      {"||", BinaryOp::Or},  {"&&", BinaryOp::And}, {"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne},
      {"<", BinaryOp::Lt},   {"<=", BinaryOp::Le},  {">", BinaryOp::Gt},  {">=", BinaryOp::Ge},
      {"+", BinaryOp::Add},  {"-", BinaryOp::Sub},  {"*", BinaryOp::Mul}, {"/", BinaryOp::Div},
      {"%", BinaryOp::Mod},
  }};
  for (const auto& [text, op] : table) {
    if (t.text == text && precedence(op) == level) {
      out = op;
      return true;
    }
  }
  return false;
}

SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
  SourceSpan s = a;
  if (b.line == a.line && b.column >= a.column) s.length = b.column + b.length - a.column;
  return s;
}

Expr parse_binary(TokenCursor& cur, int level, ExprSyntax syntax);

Expr parse_primary(TokenCursor& cur, ExprSyntax syntax) {
  TokenCursor::Depth guard(cur);
  const Token& t = cur.peek();
  Expr e;
  if (t.kind == TokenKind::Int) {
    cur.next();
    e = int_lit(t.int_value, t.span);
  } else if (t.kind == TokenKind::Real) {
    cur.next();
    e = real_lit(t.real_value, t.span);
  } else if (t.is_ident("true") || t.is_ident("false")) {
    cur.next();
    e = bool_lit(t.text == "true", t.span);
  } else if (t.kind == TokenKind::Ident && !is_keyword(t.text)) {
    const Token name = cur.next();
    if (cur.peek().is("(")) {
      cur.next();
      std::vector<Expr> args;
      if (!cur.peek().is(")")) {
        do {
          args.push_back(parse_binary(cur, 1, syntax));
        } while (cur.accept(","));
      }
      const Token& close = cur.expect(")");
      e = call(name.text, std::move(args), join(name.span, close.span));
    } else if (cur.peek().is("[")) {
      cur.next();
      Expr idx = parse_binary(cur, 1, syntax);
      const Token& close = cur.expect("]");
      e = index(name.text, std::move(idx), join(name.span, close.span));
    } else {
      e = var(name.text, name.span);
    }
  } else if (t.is("(")) {
    cur.next();
    e = parse_binary(cur, 1, syntax);
    cur.expect(")");
  } else {
    cur.fail("expression (literal, identifier, '(', '!' or '-')");
  }
  while (syntax.allow_member && cur.peek().is(".")) {
    cur.next();
    const Token& m = cur.expect_identifier("member name");
    e = member(e, m.text, join(e->span, m.span));
  }
  return e;
}

Expr parse_unary(TokenCursor& cur, ExprSyntax syntax) {
  TokenCursor::Depth guard(cur);
  const Token& t = cur.peek();
  if (t.is("!")) {
    const SourceSpan s = cur.next().span;
    Expr operand = parse_unary(cur, syntax);
    return unary(UnaryOp::Not, operand, join(s, operand->span));
  }
  if (t.is("-")) {
    const SourceSpan s = cur.next().span;
    // Fold negative numeric literals so that "-1" round-trips as a literal.
    if (cur.peek().kind == TokenKind::Int) {
      const Token& n = cur.next();
      return int_lit(-n.int_value, join(s, n.span));
    }
    if (cur.peek().kind == TokenKind::Real) {
      const Token& n = cur.next();
      return real_lit(-n.real_value, join(s, n.span));
    }
    Expr operand = parse_unary(cur, syntax);
    return unary(UnaryOp::Neg, operand, join(s, operand->span));
  }
  return parse_primary(cur, syntax);
}

Expr parse_binary(TokenCursor& cur, int level, ExprSyntax syntax) {
  TokenCursor::Depth guard(cur);
  if (level > 6) return parse_unary(cur, syntax);
  Expr lhs = parse_binary(cur, level + 1, syntax);
  BinaryOp op;
  while (binary_op_for(cur.peek(), level, op)) {
    cur.next();
    Expr rhs = parse_binary(cur, level + 1, syntax);
    lhs = binary(op, lhs, rhs, join(lhs->span, rhs->span));
  }
  return lhs;
}

Stmt parse_statement(TokenCursor& cur) {
  TokenCursor::Depth guard(cur);
  const Token& t = cur.peek();
  if (t.is_ident("if")) {
    const SourceSpan s = cur.next().span;
    cur.expect("(");
    Expr cond = parse_binary(cur, 1, {});
    cur.expect(")");
    Block then_b = parse_block(cur);
    Block else_b;
    if (cur.accept_ident("else")) {
      if (cur.peek().is_ident("if")) {
        else_b.push_back(parse_statement(cur));
      } else {
        else_b = parse_block(cur);
      }
    }
    return if_stmt(cond, std::move(then_b), std::move(else_b), s);
  }
  if (t.kind != TokenKind::Ident || is_keyword(t.text)) cur.fail("statement (assignment or 'if')");
  const Token name = cur.next();
  Expr idx;
  if (cur.accept("[")) {
    idx = parse_binary(cur, 1, {});
    cur.expect("]");
  }
  auto target_ref = [&]() { return idx ? index(name.text, idx, name.span) : var(name.text, name.span); };
  Stmt st;
  if (cur.accept("=")) {
    st = assign(name.text, parse_binary(cur, 1, {}), idx, name.span);
  } else if (cur.peek().is("+=") || cur.peek().is("-=")) {
    const bool plus = cur.next().text == "+=";
    Expr rhs = parse_binary(cur, 1, {});
    st = assign(name.text, binary(plus ? BinaryOp::Add : BinaryOp::Sub, target_ref(), rhs), idx, name.span);
  } else if (cur.peek().is("++") || cur.peek().is("--")) {
    const bool plus = cur.next().text == "++";
    st = assign(name.text, binary(plus ? BinaryOp::Add : BinaryOp::Sub, target_ref(), int_lit(1)), idx, name.span);
  } else {
    cur.fail("'=', '+=', '-=', '++' or '--'");
  }
  cur.expect(";");
  return st;
}

void print_expr(std::ostream& os, const Expr& e, int parent_prec, bool right_side) {
  switch (e->kind) {
    case ExprNode::Kind::IntLit:
      if (e->int_value < 0 && parent_prec >= kUnaryPrecedence) {
        os << "(" << e->int_value << ")";
      } else {
        os << e->int_value;
      }
      return;
    case ExprNode::Kind::RealLit:
      if (e->real_value < 0 && parent_prec >= kUnaryPrecedence) {
        os << "(" << format_real(e->real_value) << ")";
      } else {
        os << format_real(e->real_value);
      }
      return;
    case ExprNode::Kind::BoolLit:
      os << (e->bool_value ? "true" : "false");
      return;
    case ExprNode::Kind::Var:
      os << e->name;
      return;
    case ExprNode::Kind::Index:
      os << e->name << "[";
      print_expr(os, e->args[0], 0, false);
      os << "]";
      return;
    case ExprNode::Kind::Call:
      os << e->name << "(";
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, e->args[i], 0, false);
      }
      os << ")";
      return;
    case ExprNode::Kind::Member: {
      const auto k = e->args[0]->kind;
      const bool simple = k == ExprNode::Kind::Var || k == ExprNode::Kind::Index || k == ExprNode::Kind::Call ||
                          k == ExprNode::Kind::Member;
      if (!simple) os << "(";
      print_expr(os, e->args[0], 8, false);
      if (!simple) os << ")";
      os << "." << e->name;
      return;
    }
    case ExprNode::Kind::Unary: {
      const bool paren = parent_prec > kUnaryPrecedence;
      if (paren) os << "(";
      os << (e->unary_op == UnaryOp::Not ? "!" : "-");
      // "- -x" must not lex as "--".
      const auto& inner = e->args[0];
      const bool neg_inner = e->unary_op == UnaryOp::Neg &&
                             ((inner->kind == ExprNode::Kind::Unary && inner->unary_op == UnaryOp::Neg) ||
                              (inner->kind == ExprNode::Kind::IntLit && inner->int_value < 0) ||
                              (inner->kind == ExprNode::Kind::RealLit && inner->real_value < 0) ||
                              inner->kind == ExprNode::Kind::IntLit || inner->kind == ExprNode::Kind::RealLit);
      if (neg_inner) {
        os << "(";
        print_expr(os, inner, 0, false);
        os << ")";
      } else {
        print_expr(os, inner, kUnaryPrecedence, false);
      }
      if (paren) os << ")";
      return;
    }
    case ExprNode::Kind::Binary: {
      const int p = precedence(e->binary_op);
      const bool paren = p < parent_prec || (p == parent_prec && right_side);
      if (paren) os << "(";
      print_expr(os, e->args[0], p, false);
      os << " " << op_text(e->binary_op) << " ";
      print_expr(os, e->args[1], p, true);
      if (paren) os << ")";
      return;
    }
  }
}

void print_block(std::ostream& os, const Block& b, int indent);

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
  const bool inline_mode = indent < 0;
  const std::string pad = inline_mode ? "" : std::string(static_cast<std::size_t>(indent) * 2, ' ');
  if (s->kind == StmtNode::Kind::Assign) {
    os << pad << s->target;
    if (s->index) {
      os << "[";
      print_expr(os, s->index, 0, false);
      os << "]";
    }
    os << " = ";
    print_expr(os, s->value, 0, false);
    os << ";";
    return;
  }
  os << pad << "if (";
  print_expr(os, s->condition, 0, false);
  os << ") ";
  print_block(os, s->then_block, indent);
  if (!s->else_block.empty()) {
    os << " else ";
    print_block(os, s->else_block, indent);
  }
}

void print_block(std::ostream& os, const Block& b, int indent) {
  if (b.empty()) {
    os << "{ }";
    return;
  }
  if (indent < 0) {
    os << "{ ";
    for (const auto& s : b) {
      print_stmt(os, s, -1);
      os << " ";
    }
    os << "}";
    return;
  }
  os << "{\n";
  for (const auto& s : b) {
    print_stmt(os, s, indent + 1);
    os << "\n";
  }
  os << std::string(static_cast<std::size_t>(indent) * 2, ' ') << "}";
}

std::shared_ptr<ExprNode> make(ExprNode::Kind k, SourceSpan span) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->span = std::move(span);
  return n;
}

}  // namespace

Expr int_lit(std::int64_t v, SourceSpan span) {
  auto n = make(ExprNode::Kind::IntLit, std::move(span));
  n->int_value = v;
  return n;
}

Expr real_lit(double v, SourceSpan span) {
  auto n = make(ExprNode::Kind::RealLit, std::move(span));
  n->real_value = v;
  return n;
}

Expr bool_lit(bool v, SourceSpan span) {
  auto n = make(ExprNode::Kind::BoolLit, std::move(span));
  n->bool_value = v;
  return n;
}

Expr var(std::string name, SourceSpan span) {
  auto n = make(ExprNode::Kind::Var, std::move(span));
  n->name = std::move(name);
  return n;
}

Expr index(std::string array, Expr idx, SourceSpan span) {
  auto n = make(ExprNode::Kind::Index, std::move(span));
  n->name = std::move(array);
  n->args.push_back(std::move(idx));
  return n;
}

Expr call(std::string fn, std::vector<Expr> args, SourceSpan span) {
  auto n = make(ExprNode::Kind::Call, std::move(span));
  n->name = std::move(fn);
  n->args = std::move(args);
  return n;
}

Expr member(Expr base, std::string name, SourceSpan span) {
  auto n = make(ExprNode::Kind::Member, std::move(span));
  n->name = std::move(name);
  n->args.push_back(std::move(base));
  return n;
}

Expr unary(UnaryOp op, Expr e, SourceSpan span) {
  auto n = make(ExprNode::Kind::Unary, std::move(span));
  n->unary_op = op;
  n->args.push_back(std::move(e));
  return n;
}

Expr binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span) {
  auto n = make(ExprNode::Kind::Binary, std::move(span));
  n->binary_op = op;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return n;
}

Expr logical_not(Expr e) { return unary(UnaryOp::Not, std::move(e)); }

Expr conjunction(const std::vector<Expr>& parts) {
  if (parts.empty()) return bool_lit(true);
  Expr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = binary(BinaryOp::And, acc, parts[i]);
  return acc;
}

std::vector<Expr> conjuncts(const Expr& e) {
  std::vector<Expr> out;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr cur = stack.back();
    stack.pop_back();
    if (cur->kind == ExprNode::Kind::Binary && cur->binary_op == BinaryOp::And) {
      stack.push_back(cur->args[1]);
      stack.push_back(cur->args[0]);
    } else {
      out.push_back(cur);
    }
  }
  return out;
}

Stmt assign(std::string target, Expr value, Expr idx, SourceSpan span) {
  auto n = std::make_shared<StmtNode>();
  n->kind = StmtNode::Kind::Assign;
  n->span = std::move(span);
  n->target = std::move(target);
  n->index = std::move(idx);
  n->value = std::move(value);
  return n;
}

Stmt if_stmt(Expr cond, Block then_block, Block else_block, SourceSpan span) {
  auto n = std::make_shared<StmtNode>();
  n->kind = StmtNode::Kind::If;
  n->span = std::move(span);
  n->condition = std::move(cond);
  n->then_block = std::move(then_block);
  n->else_block = std::move(else_block);
  return n;
}

Expr parse_expression(TokenCursor& cur, ExprSyntax syntax) {
  const int level = syntax.min_level < 1 ? 1 : syntax.min_level > 6 ? 6 : syntax.min_level;
  syntax.min_level = 1;
  return parse_binary(cur, level, syntax);
}

Block parse_block(TokenCursor& cur) {
  TokenCursor::Depth guard(cur);
  cur.expect("{");
  Block b;
  while (!cur.peek().is("}")) {
    if (cur.at_end()) cur.fail("'}'");
    b.push_back(parse_statement(cur));
  }
  cur.next();
  return b;
}

Expr parse_expression(std::string_view text, ExprSyntax syntax) {
  TokenCursor cur(tokenize(text));
  Expr e = parse_expression(cur, syntax);
  if (!cur.at_end()) cur.fail("end of expression");
  return e;
}

Block parse_statements(std::string_view text) {
  TokenCursor cur(tokenize(text));
  Block b;
  while (!cur.at_end()) b.push_back(parse_statement(cur));
  return b;
}

std::string to_string(const Expr& e) {
  if (!e) return "true";
  std::ostringstream os;
  print_expr(os, e, 0, false);
  return os.str();
}

std::string to_string(const Block& b, int indent) {
  std::ostringstream os;
  print_block(os, b, indent);
  return os.str();
}

bool same_expr(const Expr& a, const Expr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprNode::Kind::IntLit:
      if (a->int_value != b->int_value) return false;
      break;
    case ExprNode::Kind::RealLit:
      if (a->real_value != b->real_value) return false;
      break;
    case ExprNode::Kind::BoolLit:
      if (a->bool_value != b->bool_value) return false;
      break;
    case ExprNode::Kind::Unary:
      if (a->unary_op != b->unary_op) return false;
      break;
    case ExprNode::Kind::Binary:
      if (a->binary_op != b->binary_op) return false;
      break;
    default:
      break;
  }
  if (a->name != b->name || a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i) {
    if (!same_expr(a->args[i], b->args[i])) return false;
  }
  return true;
}

bool same_block(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = *a[i];
    const auto& y = *b[i];
    if (x.kind != y.kind) return false;
    if (x.kind == StmtNode::Kind::Assign) {
      if (x.target != y.target || !same_expr(x.index, y.index) || !same_expr(x.value, y.value)) return false;
    } else {
      if (!same_expr(x.condition, y.condition) || !same_block(x.then_block, y.then_block) ||
          !same_block(x.else_block, y.else_block))
        return false;
    }
  }
  return true;
}

bool is_reserved_name(std::string_view name) { return name.size() >= 2 && name[0] == '_' && name[1] == '_'; }

bool is_keyword(std::string_view name) {
  for (auto k : kKeywords) {
    if (k == name) return true;
  }
  return false;
}

}  // namespace cpssv
