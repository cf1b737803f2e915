#include "labvar/compiled.hpp"

#include <cmath>

namespace labvar {

namespace {

void emit(const Expr& e, const CompiledExpr::Resolver& resolve,
          std::vector<std::tuple<int, int, double>>& raw, int& depth,
          int& max_depth) {
  auto push = [&](int op, int arg, double c) {
    raw.emplace_back(op, arg, c);
  };
  switch (e->kind) {
    case ExprKind::Constant: {
      push(0, 0, static_cast<double>(e->value.num()) / e->value.den());
      max_depth = std::max(max_depth, ++depth);
      return;
    }
    case ExprKind::Symbol:
    case ExprKind::FuncSym: {
      push(1, resolve(*e), 0.0);
      max_depth = std::max(max_depth, ++depth);
      return;
    }
    case ExprKind::Sum:
    case ExprKind::Product: {
      for (const Expr& c : e->children) emit(c, resolve, raw, depth, max_depth);
      const int n = static_cast<int>(e->children.size());
      push(e->kind == ExprKind::Sum ? 2 : 3, n, 0.0);
      depth -= n - 1;
      return;
    }
    case ExprKind::Power: {
      emit(e->pbase, resolve, raw, depth, max_depth);
      if (e->exponent.is_integer() && e->exponent.num() >= -64 &&
          e->exponent.num() <= 64) {
        push(5, static_cast<int>(e->exponent.num()), 0.0);
      } else {
        push(6, 0,
             static_cast<double>(e->exponent.num()) / e->exponent.den());
      }
      return;
    }
  }
  throw CompileError("cannot compile expression node: " + to_string(e));
}

}  // namespace

CompiledExpr CompiledExpr::compile(const Expr& e, const Resolver& resolve) {
  CompiledExpr out;
  std::vector<std::tuple<int, int, double>> raw;
  int depth = 0;
  int max_depth = 0;
  emit(e, resolve, raw, depth, max_depth);
  out.prog_.reserve(raw.size());
  for (const auto& [op, arg, c] : raw) {
    out.prog_.push_back({static_cast<Op>(op), arg, c});
  }
  out.max_stack_ = std::max(max_depth, 1);
  return out;
}

double CompiledExpr::eval(const double* slots) const {
  double local[64];
  std::vector<double> heap;
  double* st = local;
  if (max_stack_ > 64) {
    heap.resize(static_cast<std::size_t>(max_stack_));
    st = heap.data();
  }
  int top = -1;
  for (const Ins& ins : prog_) {
    switch (ins.op) {
      case Op::Const:
        st[++top] = ins.c;
        break;
      case Op::Slot:
        st[++top] = slots[ins.arg];
        break;
      case Op::AddN: {
        double s = 0.0;
        for (int k = 0; k < ins.arg; ++k) s += st[top--];
        st[++top] = s;
        break;
      }
      case Op::MulN: {
        double s = 1.0;
        for (int k = 0; k < ins.arg; ++k) s *= st[top--];
        st[++top] = s;
        break;
      }
      case Op::Neg:
        st[top] = -st[top];
        break;
      case Op::PowInt: {
        const double b = st[top];
        int n = ins.arg;
        const bool inv = n < 0;
        if (inv) n = -n;
        double r = 1.0, p = b;
        while (n > 0) {
          if (n & 1) r *= p;
          p *= p;
          n >>= 1;
        }
        st[top] = inv ? 1.0 / r : r;
        break;
      }
      case Op::PowReal:
        st[top] = std::pow(st[top], ins.c);
        break;
    }
  }
  return st[top];
}

}  // namespace labvar
