#include "labvar/numeric.hpp"

#include <cmath>
#include <random>

#include "labvar/canonical.hpp"

namespace labvar {

namespace {

double lookup(const PointBinding& binding, const std::string& key, const Expr& node) {
  auto it = binding.find(key);
  if (it == binding.end()) throw EvalError("unbound symbol '" + key + "'", node);
  return it->second;
}

}  // namespace

double evaluate(const Expr& e, const PointBinding& binding) {
  switch (e->kind) {
    case ExprKind::Constant:
      return e->value.to_double();
    case ExprKind::Symbol:
    case ExprKind::FuncSym:
      return lookup(binding, e->display(), e);
    case ExprKind::Sum: {
      double s = 0.0;
      for (const auto& c : e->children) s += evaluate(c, binding);
      return s;
    }
    case ExprKind::Product: {
      double p = 1.0;
      for (const auto& c : e->children) p *= evaluate(c, binding);
      return p;
    }
    case ExprKind::Power: {
      const double b = evaluate(e->pbase, binding);
      const Rational& q = e->exponent;
      double r;
      if (q.is_integer()) {
        if (b == 0.0 && q.sign() < 0)
          throw EvalError("division by zero", e);
        r = std::pow(b, static_cast<double>(q.num()));
      } else {
        if (b < 0.0)
          throw EvalError("negative base raised to a fractional power", e);
        if (b == 0.0 && q.sign() < 0)
          throw EvalError("division by zero", e);
        r = std::pow(b, q.to_double());
      }
      if (!std::isfinite(r)) throw EvalError("non-finite value", e);
      return r;
    }
  }
  return 0.0;
}

EquivalenceReport check_equivalent(const Expr& a, const Expr& b,
                                   const EquivalenceOptions& opts) {
  EquivalenceReport rep;
  const Expr diff = a - b;
  if (canonical_zero(diff)) {
    rep.equivalent = true;
    rep.canonically_zero = true;
    return rep;
  }

  std::vector<std::string> keys;
  for (const Expr& e : {a, b}) {
    for (const auto& s : free_symbols(e)) keys.push_back(s->display());
    for (const auto& f : func_nodes(e)) keys.push_back(f->display());
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(opts.low, opts.high);
  const int max_rejects = opts.max_redraw_factor * std::max(opts.trials, 1);

  rep.equivalent = true;
  int rejects = 0;
  for (int t = 0; t < opts.trials; ++t) {
    PointBinding binding;
    double va, vb;
    while (true) {
      binding.clear();
      for (const auto& k : keys) binding[k] = dist(rng);
      if (opts.admissible && !opts.admissible(binding)) {
        if (++rejects > max_rejects)
          throw std::runtime_error(
              "equivalence check: could not draw an admissible sample point");
        continue;
      }
      try {
        va = evaluate(a, binding);
        vb = evaluate(b, binding);
      } catch (const EvalError&) {
        if (++rejects > max_rejects)
          throw std::runtime_error(
              "equivalence check: could not draw a nonsingular sample point");
        continue;
      }
      break;
    }
    rep.trials_used++;
    const double resid = std::abs(va - vb);
    rep.max_residual = std::max(rep.max_residual, resid);
    if (resid > opts.tolerance * (1.0 + std::abs(va))) rep.equivalent = false;
  }
  return rep;
}

}  // namespace labvar
