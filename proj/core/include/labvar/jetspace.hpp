#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "labvar/expr.hpp"

namespace labvar {

/// Thrown for structurally invalid jet-space requests (unknown variable,
/// derivative order beyond the supported range, name clashes, ...).
struct JetSpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Registry of the coordinates of a finite-order jet space: independent
/// variables, dependent variables, their formal derivatives (symmetric
/// multi-indices), and scalar parameters.
///
/// Derivative coordinates are available up to order `kHardOrderCap`
/// regardless of the declared `max_order`, so that repeated total
/// derivatives of expressions at the declared order stay representable;
/// anything beyond the cap is a clean error.
class JetSpace {
 public:
  static constexpr int kHardOrderCap = 4;

  JetSpace(std::vector<std::string> independents,
           std::vector<std::string> dependents,
           std::vector<std::string> parameters = {},
           int max_order = 2);

  const std::vector<std::string>& independents() const { return indep_; }
  const std::vector<std::string>& dependents() const { return dep_; }
  const std::vector<std::string>& parameters() const { return param_; }
  int max_order() const { return max_order_; }

  bool has_independent(const std::string& n) const;
  bool has_dependent(const std::string& n) const;
  bool has_parameter(const std::string& n) const;

  Expr independent(const std::string& name) const;
  Expr parameter(const std::string& name) const;

  /// Jet coordinate for dependent `dep` differentiated along `index`
  /// (a multiset of independent-variable names; empty for the variable
  /// itself).  The index is sorted internally, so "ab" and "ba" name the
  /// same coordinate.
  Expr coordinate(const std::string& dep, const std::vector<std::string>& index) const;

  /// Convenience spelling: each character of `index` names one
  /// single-character independent variable, e.g. coordinate("x", "ab").
  Expr coordinate(const std::string& dep, const std::string& index) const;

  /// Declares an opaque scalar function of zeroth-order coordinates,
  /// e.g. declare_function("P", {"x", "y"}).  Returns the undifferentiated
  /// function node; derivative nodes arise from partial().
  Expr declare_function(const std::string& name, const std::vector<std::string>& args);
  std::optional<std::vector<std::string>> function_args(const std::string& name) const;

  /// Resolves a display name ("a", "f", "x_ab", ...) to its symbol, if it
  /// names a coordinate of this space.  Declared functions are not resolved
  /// here (the parser handles them via function_args()).
  std::optional<Expr> lookup(const std::string& name) const;

  /// All jet coordinates with derivative order <= `up_to_order`, in a fixed
  /// deterministic order (dependents in declaration order, indices by order
  /// then lexicographically).
  std::vector<Expr> all_coordinates(int up_to_order) const;

  /// All derivative multi-indices of exactly the given order, sorted.
  std::vector<std::vector<std::string>> indices_of_order(int order) const;

 private:
  std::vector<std::string> indep_;
  std::vector<std::string> dep_;
  std::vector<std::string> param_;
  std::map<std::string, std::vector<std::string>> funcs_;
  int max_order_;
};

}  // namespace labvar
