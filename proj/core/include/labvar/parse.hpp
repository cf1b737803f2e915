#pragma once

#include <string>

#include "labvar/expr.hpp"
#include "labvar/jetspace.hpp"

namespace labvar {

/// Thrown on malformed expression text; the message carries the character
/// offset of the failure.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses infix expression text over the coordinates of `space`.
///
/// Supported syntax: rational and decimal literals (decimals are exact,
/// 0.5 -> 1/2), identifiers naming coordinates or parameters ("x_a", "f"),
/// applications of declared opaque functions ("P(x, y)"), binary + - * /,
/// unary -, and ^ with a rational literal exponent such as 2, (-1) or (5/2).
Expr parse_expression(const std::string& text, const JetSpace& space);

}  // namespace labvar
