#pragma once

#include <functional>
#include <map>
#include <string>

#include "labvar/expr.hpp"

namespace labvar {

/// Values for every symbol and opaque-function node of an expression, keyed
/// by canonical display name ("x_ab", "f", "P_xy", ...).
using PointBinding = std::map<std::string, double>;

/// Thrown when numeric evaluation hits a singular or unbound point; carries
/// the offending subexpression.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, Expr where)
      : std::runtime_error(what + " in subexpression: " + to_string(where)),
        where_(std::move(where)) {}
  const Expr& where() const { return where_; }

 private:
  Expr where_;
};

double evaluate(const Expr& e, const PointBinding& binding);

struct EquivalenceOptions {
  int trials = 100;
  double tolerance = 1e-9;       ///< scaled by (1 + |value of first operand|)
  double low = -2.0, high = 2.0; ///< sampling interval for each unknown
  unsigned long long seed = 0x5eedULL;
  /// Optional admissibility filter; bindings it rejects are redrawn.
  std::function<bool(const PointBinding&)> admissible;
  /// Give up after this many times `trials` consecutive rejected/singular draws.
  int max_redraw_factor = 10;
};

struct EquivalenceReport {
  bool equivalent = false;
  bool canonically_zero = false;  ///< difference canonicalized to literal 0
  double max_residual = 0.0;      ///< largest |e1 - e2| seen (0 when canonical)
  int trials_used = 0;
};

/// Decides whether two expressions agree as functions: first canonically
/// (difference normalizes to zero), otherwise by evaluating both at random
/// admissible points.  Sampling is deterministic for fixed options.
EquivalenceReport check_equivalent(const Expr& a, const Expr& b,
                                   const EquivalenceOptions& opts = {});

inline bool equivalent(const Expr& a, const Expr& b, int trials = 100) {
  EquivalenceOptions o;
  o.trials = trials;
  return check_equivalent(a, b, o).equivalent;
}

}  // namespace labvar
