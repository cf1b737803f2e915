#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "labvar/rational.hpp"

namespace labvar {

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

enum class ExprKind { Constant, Symbol, FuncSym, Sum, Product, Power };

enum class SymbolRole {
  Independent,     ///< base-space variable (a, b, t, ...)
  JetCoordinate,   ///< dependent variable or one of its formal derivatives
  Parameter        ///< scalar parameter bound only at evaluation time (f, g, ...)
};

/// Immutable expression node.  Trees are shared; all rewriting produces new
/// nodes.  Construction goes through the builder functions below, which do
/// light normalization (flattening, constant folding) but no reordering.
class ExprNode {
 public:
  ExprKind kind;

  // Constant
  Rational value;

  // Symbol: `name` is the canonical display name and the evaluation key.
  // JetCoordinate symbols remember the dependent variable they derive from
  // and the (sorted) multi-index of independent-variable derivatives.
  std::string name;
  SymbolRole role = SymbolRole::Parameter;
  std::string base;                 ///< dependent variable name, "" otherwise
  std::vector<std::string> index;   ///< sorted derivative multi-index

  // FuncSym: opaque scalar function of declared zeroth-order coordinates,
  // e.g. P(x, y) or phi(a, b), carrying formal partial-derivative counts per
  // argument.  `name` above holds the bare function name; `display()` gives
  // the evaluation key (e.g. "P_xy").
  std::vector<std::string> args;    ///< argument coordinate names, fixed order
  std::vector<int> dcount;          ///< per-argument derivative multiplicity

  // Sum / Product
  std::vector<Expr> children;

  // Power
  Expr pbase;
  Rational exponent;

  /// Canonical display name; for FuncSym encodes the derivative multi-index.
  std::string display() const;

  std::size_t hash() const { return hash_; }
  void set_hash(std::size_t h) { hash_ = h; }

 private:
  std::size_t hash_ = 0;
};

/// Total structural order on expressions (deterministic across runs).
/// Returns <0, 0, >0.
int compare(const Expr& a, const Expr& b);
bool structurally_equal(const Expr& a, const Expr& b);

// ---- builders ----

Expr constant(const Rational& v);
Expr constant(std::int64_t v);
Expr symbol(const std::string& name, SymbolRole role);
Expr jet_symbol(const std::string& base, const std::vector<std::string>& index);
Expr func_symbol(const std::string& name, const std::vector<std::string>& args,
                 const std::vector<int>& dcount);

Expr make_sum(std::vector<Expr> terms);
Expr make_product(std::vector<Expr> factors);
Expr make_power(const Expr& base, const Rational& exponent);

inline Expr operator+(const Expr& a, const Expr& b) { return make_sum({a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return make_product({a, b}); }
Expr operator-(const Expr& a);
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
Expr operator/(const Expr& a, const Expr& b);
inline Expr pow(const Expr& base, const Rational& e) { return make_power(base, e); }
inline Expr pow(const Expr& base, std::int64_t e) { return make_power(base, Rational(e)); }

bool is_zero(const Expr& e);
bool is_one(const Expr& e);

/// Collects every distinct Symbol node in `e` (not FuncSym nodes).
std::vector<Expr> free_symbols(const Expr& e);
/// Collects every distinct FuncSym node in `e`.
std::vector<Expr> func_nodes(const Expr& e);

/// Plain structural rendering (used in error messages).  For the canonical
/// deterministic form use labvar::print() from canonical.hpp.
std::string to_string(const Expr& e);

}  // namespace labvar
