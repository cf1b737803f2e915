#pragma once

#include <string>

#include "labvar/expr.hpp"

namespace labvar {

/// Thrown when canonical expansion would exceed the monomial budget.
struct CanonicalSizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Canonical normal form: a flattened sum of monomials, each an exact
/// rational coefficient times a sorted product of powers.  Products are
/// expanded over sums; integer powers of sums are expanded; same-base
/// powers are merged by adding exponents.  Non-integer powers are never
/// distributed over their base (so (x^2)^(1/2) stays nested rather than
/// collapsing to x).  The result is deterministic: structurally equal
/// inputs yield pointer-distinct but structurally equal outputs, and
/// algebraically equal polynomial/rational-monomial inputs yield
/// structurally equal outputs.
Expr canonical(const Expr& e);

/// True when canonical(e) is the literal constant 0.
bool canonical_zero(const Expr& e);

/// Deterministic text rendering of the canonical form.
std::string print(const Expr& e);

}  // namespace labvar
