#include "labvar/calculus.hpp"

#include <algorithm>

namespace labvar {

namespace {

Expr bump_func_derivative(const Expr& f, std::size_t arg_pos) {
  std::vector<int> d = f->dcount;
  d[arg_pos] += 1;
  return func_symbol(f->name, f->args, d);
}

}  // namespace

Expr partial(const Expr& e, const Expr& coord) {
  if (coord->kind != ExprKind::Symbol ||
      (coord->role != SymbolRole::Independent && coord->role != SymbolRole::JetCoordinate))
    throw std::invalid_argument(
        "partial derivatives are taken with respect to coordinates, got " +
        to_string(coord));
  switch (e->kind) {
    case ExprKind::Constant:
      return constant(0);
    case ExprKind::Symbol:
      return structurally_equal(e, coord) ? constant(1) : constant(0);
    case ExprKind::FuncSym: {
      // Chain through a declared argument: only zeroth-order coordinates can
      // be arguments, and they match by name.
      if (!coord->index.empty()) return constant(0);
      for (std::size_t i = 0; i < e->args.size(); ++i)
        if (e->args[i] == coord->name) return bump_func_derivative(e, i);
      return constant(0);
    }
    case ExprKind::Sum: {
      std::vector<Expr> terms;
      terms.reserve(e->children.size());
      for (const auto& c : e->children) terms.push_back(partial(c, coord));
      return make_sum(std::move(terms));
    }
    case ExprKind::Product: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < e->children.size(); ++i) {
        std::vector<Expr> fs = e->children;
        fs[i] = partial(e->children[i], coord);
        terms.push_back(make_product(std::move(fs)));
      }
      return make_sum(std::move(terms));
    }
    case ExprKind::Power: {
      Expr db = partial(e->pbase, coord);
      return make_product({constant(e->exponent),
                           make_power(e->pbase, e->exponent - Rational(1)), db});
    }
  }
  return constant(0);
}

Expr total_derivative(const JetSpace& space, const Expr& e, const std::string& indep) {
  if (!space.has_independent(indep))
    throw JetSpaceError("total derivative along unknown variable '" + indep + "'");
  switch (e->kind) {
    case ExprKind::Constant:
      return constant(0);
    case ExprKind::Symbol:
      switch (e->role) {
        case SymbolRole::Parameter:
          return constant(0);
        case SymbolRole::Independent:
          return e->name == indep ? constant(1) : constant(0);
        case SymbolRole::JetCoordinate: {
          std::vector<std::string> idx = e->index;
          idx.push_back(indep);
          return space.coordinate(e->base, idx);
        }
      }
      return constant(0);
    case ExprKind::FuncSym: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        Expr darg;
        const std::string& a = e->args[i];
        if (space.has_independent(a)) {
          if (a != indep) continue;
          darg = constant(1);
        } else {
          darg = space.coordinate(a, std::vector<std::string>{indep});
        }
        terms.push_back(make_product({bump_func_derivative(e, i), darg}));
      }
      return make_sum(std::move(terms));
    }
    case ExprKind::Sum: {
      std::vector<Expr> terms;
      terms.reserve(e->children.size());
      for (const auto& c : e->children) terms.push_back(total_derivative(space, c, indep));
      return make_sum(std::move(terms));
    }
    case ExprKind::Product: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < e->children.size(); ++i) {
        std::vector<Expr> fs = e->children;
        fs[i] = total_derivative(space, e->children[i], indep);
        terms.push_back(make_product(std::move(fs)));
      }
      return make_sum(std::move(terms));
    }
    case ExprKind::Power: {
      Expr db = total_derivative(space, e->pbase, indep);
      return make_product({constant(e->exponent),
                           make_power(e->pbase, e->exponent - Rational(1)), db});
    }
  }
  return constant(0);
}

Expr euler_operator(const JetSpace& space, const Expr& L, const std::string& dep) {
  if (!space.has_dependent(dep))
    throw JetSpaceError("variational derivative with respect to unknown variable '" +
                        dep + "'");
  // Highest derivative order of `dep` appearing in L.
  int max_order = 0;
  for (const auto& s : free_symbols(L))
    if (s->role == SymbolRole::JetCoordinate && s->base == dep)
      max_order = std::max(max_order, static_cast<int>(s->index.size()));
  std::vector<Expr> terms;
  for (int k = 0; k <= max_order; ++k) {
    for (const auto& idx : space.indices_of_order(k)) {
      Expr p = partial(L, space.coordinate(dep, idx));
      if (is_zero(p)) continue;
      for (const auto& i : idx) p = total_derivative(space, p, i);
      if (k % 2 == 1) p = -p;
      terms.push_back(p);
    }
  }
  return make_sum(std::move(terms));
}

Expr substitute(const Expr& e, const Expr& pattern, const Expr& replacement) {
  if (structurally_equal(e, pattern)) return replacement;
  switch (e->kind) {
    case ExprKind::Sum: {
      std::vector<Expr> cs;
      cs.reserve(e->children.size());
      for (const auto& c : e->children) cs.push_back(substitute(c, pattern, replacement));
      return make_sum(std::move(cs));
    }
    case ExprKind::Product: {
      std::vector<Expr> cs;
      cs.reserve(e->children.size());
      for (const auto& c : e->children) cs.push_back(substitute(c, pattern, replacement));
      return make_product(std::move(cs));
    }
    case ExprKind::Power:
      return make_power(substitute(e->pbase, pattern, replacement), e->exponent);
    default:
      return e;
  }
}

Expr substitute_function(const JetSpace& space, const Expr& e,
                         const std::string& fname, const Expr& replacement) {
  switch (e->kind) {
    case ExprKind::FuncSym: {
      if (e->name != fname) return e;
      Expr r = replacement;
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        Expr arg = space.has_independent(e->args[i])
                       ? space.independent(e->args[i])
                       : space.coordinate(e->args[i], std::vector<std::string>{});
        for (int k = 0; k < e->dcount[i]; ++k) r = partial(r, arg);
      }
      return r;
    }
    case ExprKind::Sum: {
      std::vector<Expr> cs;
      cs.reserve(e->children.size());
      for (const auto& c : e->children)
        cs.push_back(substitute_function(space, c, fname, replacement));
      return make_sum(std::move(cs));
    }
    case ExprKind::Product: {
      std::vector<Expr> cs;
      cs.reserve(e->children.size());
      for (const auto& c : e->children)
        cs.push_back(substitute_function(space, c, fname, replacement));
      return make_product(std::move(cs));
    }
    case ExprKind::Power:
      return make_power(substitute_function(space, e->pbase, fname, replacement),
                        e->exponent);
    default:
      return e;
  }
}

}  // namespace labvar
