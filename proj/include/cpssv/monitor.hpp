#pragma once

// Metric temporal logic over finite timed traces.
//
//   phi ::= atom | !phi | phi && phi | phi || phi | X phi | phi U[<=d] phi
//         | F[<=d] phi | G[<=d] phi          (F = true U, G = !F!)
//
// Atoms are boolean script expressions over globals and the property terms SystemTime,
// <Class>SFNum, <State>Num and inst.State (robot[0].RA). Bounds are written [<=d],
// [SystemTime<=d] or [x<=d] and measure time since the operator was activated. Evaluation is
// pointwise over event snapshots with strong finite semantics: obligations still open at the
// end of the trace are false.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpssv/engine.hpp"
#include "cpssv/interpreter.hpp"
#include "cpssv/script.hpp"

namespace cpssv {

struct MtlNode;
using Mtl = std::shared_ptr<const MtlNode>;

struct MtlNode {
  enum class Kind { True, False, Atom, Not, And, Or, Next, Until };
  Kind kind = Kind::True;
  std::uint32_t atom = 0;  // index into MtlFormula::atoms
  double bound = std::numeric_limits<double>::infinity();
  Mtl lhs;  // Not/Next operand; And/Or/Until left
  Mtl rhs;
};

struct MtlFormula {
  Mtl root;
  std::vector<Expr> atoms;  // distinct atom expressions
  std::string text;
};

Mtl mtl_true();
Mtl mtl_false();
Mtl mtl_atom(std::uint32_t index);
Mtl mtl_not(Mtl a);
Mtl mtl_and(Mtl a, Mtl b);
Mtl mtl_or(Mtl a, Mtl b);
Mtl mtl_next(Mtl a);
Mtl mtl_until(Mtl a, Mtl b, double bound = std::numeric_limits<double>::infinity());
Mtl mtl_eventually(Mtl a, double bound = std::numeric_limits<double>::infinity());
Mtl mtl_always(Mtl a, double bound = std::numeric_limits<double>::infinity());

/// Syntax only; propositions are resolved by bind(). Throws ParseError (syntax error,
/// negative bound).
MtlFormula parse_property(std::string_view text);

std::string to_string(const MtlFormula& f);

/// Evaluates at position 0 of a discrete timed word: times[i] and valuation[i][atom] for
/// positions 0..n-1 (n >= 1).
bool eval_word(const MtlFormula& f, const std::vector<double>& times, const std::vector<std::vector<char>>& valuation);

/// Truth value of f at every position (oracle tests use this).
std::vector<char> eval_positions(const MtlFormula& f, const std::vector<double>& times,
                                 const std::vector<std::vector<char>>& valuation);

/// A formula whose atoms are compiled against a network.
class BoundProperty {
 public:
  const MtlFormula& formula() const { return formula_; }
  /// Atom values on a snapshot.
  void valuate(const NetworkSnapshot& snap, std::vector<char>& out) const;

 private:
  friend BoundProperty bind(const MtlFormula&, const Network&);
  MtlFormula formula_;
  std::vector<CompiledExpr> atoms_;
};

/// Resolves and type-checks every atom. Throws ParseError ("unknown proposition '...'",
/// "type error: ...").
BoundProperty bind(const MtlFormula& f, const Network& net);

/// Offline verdict on a recorded trace: positions are the initial snapshot followed by one
/// snapshot per entry.
bool eval(const BoundProperty& p, const Trace& trace);

/// Online monitor by formula progression. Feed snapshots in order; the verdict is fixed as
/// soon as it no longer depends on the future and always equals eval on the full trace.
class Watch {
 public:
  explicit Watch(const MtlFormula& f);
  ~Watch();
  Watch(Watch&&) noexcept;
  Watch& operator=(Watch&&) noexcept;

  /// Consumes the next position. Returns the verdict once determined.
  std::optional<bool> observe(double time, const std::vector<char>& valuation);
  /// Declares that no further position has a time below `t`.
  std::optional<bool> expire(double t);
  /// End of trace.
  bool finish();

  std::optional<bool> verdict() const { return verdict_; }
  /// Time of the position at which the verdict became fixed (end of trace if by finish).
  double decided_at() const { return decided_at_; }

  struct Residual;  // opaque

 private:
  std::shared_ptr<const Residual> state_;
  std::optional<bool> verdict_;
  double decided_at_ = 0.0;
  double last_time_ = 0.0;
};

}  // namespace cpssv
