#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "labvar/expr.hpp"

namespace labvar {

struct CompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flattens an expression tree into a postfix program over a numeric slot
// frame.  The caller supplies a resolver that maps every leaf (Symbol or
// FuncSym node) to a slot index in the frame — and throws CompileError for
// leaves the evaluation context cannot supply — so the compiled program
// carries no name lookups at evaluation time.
class CompiledExpr {
 public:
  using Resolver = std::function<int(const ExprNode&)>;

  CompiledExpr() = default;
  static CompiledExpr compile(const Expr& e, const Resolver& resolve);

  // Evaluates against a slot frame.  Pure and thread-safe.
  double eval(const double* slots) const;
  bool compiled() const { return !prog_.empty(); }

 private:
  enum class Op : unsigned char { Const, Slot, AddN, MulN, Neg, PowInt, PowReal };
  struct Ins {
    Op op;
    int arg = 0;
    double c = 0.0;
  };
  std::vector<Ins> prog_;
  int max_stack_ = 0;
};

}  // namespace labvar
