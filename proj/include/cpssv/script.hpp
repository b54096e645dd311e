#pragma once

// Guard/action expression language: a small loop-free language over integer, real and
// boolean scalars and fixed-size arrays, with the built-ins self_pos(), now() and
// agent_count(<state>). Guards are expressions; actions are statement blocks.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cpssv/diagnostics.hpp"
#include "cpssv/lexer.hpp"

namespace cpssv {

enum class UnaryOp { Not, Neg };
enum class BinaryOp { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul, Div, Mod };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { IntLit, RealLit, BoolLit, Var, Index, Call, Member, Unary, Binary };

  Kind kind = Kind::BoolLit;
  SourceSpan span;
  std::int64_t int_value = 0;
  double real_value = 0.0;
  bool bool_value = false;
  /// Variable, array, function or member name.
  std::string name;
  UnaryOp unary_op = UnaryOp::Not;
  BinaryOp binary_op = BinaryOp::And;
  /// Index: [index]. Call: arguments. Member: [base]. Unary: [operand]. Binary: [lhs, rhs].
  std::vector<Expr> args;
};

struct StmtNode;
using Stmt = std::shared_ptr<const StmtNode>;
using Block = std::vector<Stmt>;

struct StmtNode {
  enum class Kind { Assign, If };

  Kind kind = Kind::Assign;
  SourceSpan span;
  // Assign
  std::string target;
  Expr index;  // null for scalar targets
  Expr value;
  // If
  Expr condition;
  Block then_block;
  Block else_block;
};

// Construction helpers. Spans default to empty.
Expr int_lit(std::int64_t v, SourceSpan span = {});
Expr real_lit(double v, SourceSpan span = {});
Expr bool_lit(bool v, SourceSpan span = {});
Expr var(std::string name, SourceSpan span = {});
Expr index(std::string array, Expr idx, SourceSpan span = {});
Expr call(std::string fn, std::vector<Expr> args, SourceSpan span = {});
Expr member(Expr base, std::string name, SourceSpan span = {});
Expr unary(UnaryOp op, Expr e, SourceSpan span = {});
Expr binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span = {});
Expr logical_not(Expr e);
/// Left-nested conjunction; empty input yields `true`.
Expr conjunction(const std::vector<Expr>& parts);
/// Top-level conjuncts of `e` (flattens nested &&).
std::vector<Expr> conjuncts(const Expr& e);

Stmt assign(std::string target, Expr value, Expr idx = nullptr, SourceSpan span = {});
Stmt if_stmt(Expr cond, Block then_block, Block else_block = {}, SourceSpan span = {});

/// Expression parser options; member access (`robot[0].RA`) is only legal in properties.
struct ExprSyntax {
  bool allow_member = false;
  /// Loosest binary operator level accepted at top level: 1 (||) .. 6 (*). The property
  /// parser uses 3 so that && and || stay temporal-level connectives.
  int min_level = 1;
};

Expr parse_expression(TokenCursor& cur, ExprSyntax syntax = {});
Block parse_block(TokenCursor& cur);  // '{' stmt* '}'

/// Whole-text convenience parsers; trailing tokens are a syntax error.
Expr parse_expression(std::string_view text, ExprSyntax syntax = {});
Block parse_statements(std::string_view text);  // statement list without surrounding braces

/// Canonical text with minimal parentheses; parses back to a structurally equal tree.
std::string to_string(const Expr& e);
std::string to_string(const Block& b, int indent = -1);

/// Structural equality ignoring source spans. A null expression equals only null.
bool same_expr(const Expr& a, const Expr& b);
bool same_block(const Block& a, const Block& b);

bool is_reserved_name(std::string_view name);
bool is_keyword(std::string_view name);

}  // namespace cpssv
