#pragma once

#include "labvar/expr.hpp"
#include "labvar/jetspace.hpp"

namespace labvar {

/// Formal partial derivative with respect to a single coordinate symbol
/// (independent variable or jet coordinate).  All other coordinates are held
/// fixed; opaque function nodes differentiate through their declared
/// arguments (so partial(P(x,y), x) is the node P_x).
Expr partial(const Expr& e, const Expr& coord);

/// Total derivative along the independent variable `indep`: differentiates
/// explicit dependence and advances every jet coordinate by one derivative.
/// Raising a coordinate beyond the supported jet order is an error.
Expr total_derivative(const JetSpace& space, const Expr& e, const std::string& indep);

/// Variational derivative of `L` with respect to the dependent variable
/// `dep`: sum over derivative multi-indices J of (-1)^|J| D_J(dL/du_J),
/// covering every derivative of `dep` that actually appears in `L`.
Expr euler_operator(const JetSpace& space, const Expr& L, const std::string& dep);

/// Replaces every subtree structurally equal to `pattern` by `replacement`.
Expr substitute(const Expr& e, const Expr& pattern, const Expr& replacement);

/// Replaces every node of the opaque function `fname` — including its formal
/// derivative nodes — by the matching mixed partial derivative of
/// `replacement`, which must be an expression in the function's declared
/// argument coordinates.  E.g. with P = P(x, y) and replacement f*x*y, the
/// node P_x becomes f*y.
Expr substitute_function(const JetSpace& space, const Expr& e,
                         const std::string& fname, const Expr& replacement);

}  // namespace labvar
