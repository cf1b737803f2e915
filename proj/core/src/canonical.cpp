#include "labvar/canonical.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <utility>

namespace labvar {

namespace {

constexpr std::size_t kMonomialBudget = 200000;

struct Factor {
  Expr base;      // Symbol, FuncSym, canonical Sum, or non-mergeable Power
  Rational exp;   // never zero
};

struct Monomial {
  Rational coeff;
  std::vector<Factor> factors;  // sorted by base, unique bases
};

using Poly = std::vector<Monomial>;

int cmp_factor(const Factor& a, const Factor& b) {
  if (int c = compare(a.base, b.base)) return c;
  if (a.exp == b.exp) return 0;
  return a.exp < b.exp ? -1 : 1;
}

int cmp_monomial_factors(const Monomial& a, const Monomial& b) {
  const std::size_t n = std::min(a.factors.size(), b.factors.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = cmp_factor(a.factors[i], b.factors[i])) return c;
  if (a.factors.size() != b.factors.size())
    return a.factors.size() < b.factors.size() ? -1 : 1;
  return 0;
}

void sort_and_merge_factors(std::vector<Factor>& fs) {
  std::sort(fs.begin(), fs.end(),
            [](const Factor& a, const Factor& b) { return compare(a.base, b.base) < 0; });
  std::vector<Factor> out;
  for (auto& f : fs) {
    if (!out.empty() && compare(out.back().base, f.base) == 0) {
      out.back().exp += f.exp;
      if (out.back().exp.is_zero()) out.pop_back();
    } else {
      out.push_back(std::move(f));
    }
  }
  fs = std::move(out);
}

void normalize_poly(Poly& p) {
  std::sort(p.begin(), p.end(), [](const Monomial& a, const Monomial& b) {
    return cmp_monomial_factors(a, b) < 0;
  });
  Poly out;
  for (auto& m : p) {
    if (!out.empty() && cmp_monomial_factors(out.back(), m) == 0) {
      out.back().coeff += m.coeff;
      if (out.back().coeff.is_zero()) out.pop_back();
    } else if (!m.coeff.is_zero()) {
      out.push_back(std::move(m));
    }
  }
  p = std::move(out);
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial r;
  r.coeff = a.coeff * b.coeff;
  r.factors = a.factors;
  r.factors.insert(r.factors.end(), b.factors.begin(), b.factors.end());
  sort_and_merge_factors(r.factors);
  return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.size() * b.size() > kMonomialBudget)
    throw CanonicalSizeError("canonical expansion exceeds the monomial budget");
  Poly r;
  r.reserve(a.size() * b.size());
  for (const auto& ma : a)
    for (const auto& mb : b) r.push_back(mono_mul(ma, mb));
  normalize_poly(r);
  return r;
}

Expr rebuild_monomial(const Monomial& m) {
  std::vector<Expr> fs;
  if (!m.coeff.is_one() || m.factors.empty()) fs.push_back(constant(m.coeff));
  for (const auto& f : m.factors) fs.push_back(make_power(f.base, f.exp));
  return make_product(std::move(fs));
}

Expr rebuild(const Poly& p) {
  if (p.empty()) return constant(0);
  std::vector<Expr> ts;
  ts.reserve(p.size());
  for (const auto& m : p) ts.push_back(rebuild_monomial(m));
  return make_sum(std::move(ts));
}

/// Divides out the rational content (gcd of coefficients, signed so the
/// first monomial becomes positive) and returns it.
Rational extract_content(Poly& p) {
  std::int64_t g = 0;
  std::int64_t l = 1;
  for (const auto& m : p) {
    g = std::gcd(g, std::abs(m.coeff.num()));
    l = std::lcm(l, m.coeff.den());
  }
  Rational content(g == 0 ? 1 : g, l);
  if (p[0].coeff.sign() < 0) content = -content;
  for (auto& m : p) m.coeff /= content;
  return content;
}

/// Integer n-th root of v >= 0 if exact, else nullopt.
std::optional<std::int64_t> exact_root(std::int64_t v, std::int64_t n) {
  if (v == 0 || v == 1 || n == 1) return v;
  // Sign of x^n - v, treating 64-bit overflow of x^n as "greater".
  auto powcmp = [&](std::int64_t x) -> int {
    try {
      Rational p = Rational::int_pow(Rational(x), n);
      if (p == Rational(v)) return 0;
      return p < Rational(v) ? -1 : 1;
    } catch (const OverflowError&) {
      return 1;
    }
  };
  std::int64_t lo = 0, hi = 2;
  while (powcmp(hi) < 0) hi *= 2;
  while (lo <= hi) {
    std::int64_t mid = lo + (hi - lo) / 2;
    int c = powcmp(mid);
    if (c == 0) return mid;
    if (c < 0) lo = mid + 1;
    else hi = mid - 1;
  }
  return std::nullopt;
}

Poly to_poly(const Expr& e);

Poly power_to_poly(const Expr& base_expr, const Rational& q) {
  Poly pb = to_poly(base_expr);
  if (pb.empty()) {
    if (q.sign() < 0) throw std::domain_error("canonical: 0 raised to a negative power");
    return {};
  }
  if (q.is_integer()) {
    const std::int64_t k = q.num();
    if (pb.size() == 1) {
      // (c * prod b_i^e_i)^k is exact for integer k.
      Monomial m;
      m.coeff = Rational::int_pow(pb[0].coeff, k);
      for (const auto& f : pb[0].factors) m.factors.push_back({f.base, f.exp * Rational(k)});
      sort_and_merge_factors(m.factors);
      return {m};
    }
    if (k > 0) {
      Poly r = pb;
      for (std::int64_t i = 1; i < k; ++i) r = poly_mul(r, pb);
      return r;
    }
    // Negative integer power of a genuine sum: atomic reciprocal factor with
    // the content divided out, so scalar multiples share one base.
    Rational content = extract_content(pb);
    Monomial m;
    m.coeff = Rational::int_pow(content, k);
    m.factors.push_back({rebuild(pb), Rational(k)});
    return {m};
  }
  // Fractional exponents are never distributed over products or sums
  // ((x^2)^(1/2) is not x).  A bare positive constant may simplify exactly.
  if (pb.size() == 1 && pb[0].factors.empty() && pb[0].coeff.sign() > 0) {
    const Rational& c = pb[0].coeff;
    auto rn = exact_root(c.num(), q.den());
    auto rd = exact_root(c.den(), q.den());
    if (rn && rd) {
      Monomial m;
      m.coeff = Rational::int_pow(Rational(*rn, *rd), q.num());
      return {m};
    }
  }
  Expr b = rebuild(pb);
  Monomial m;
  m.coeff = Rational(1);
  Expr p = make_power(b, q);
  if (p->kind == ExprKind::Power && structurally_equal(p->pbase, b)) {
    m.factors.push_back({b, q});
  } else {
    // make_power restructured the node (e.g. product base); keep it whole.
    m.factors.push_back({p, Rational(1)});
  }
  return {m};
}

Poly to_poly(const Expr& e) {
  switch (e->kind) {
    case ExprKind::Constant: {
      if (e->value.is_zero()) return {};
      Monomial m;
      m.coeff = e->value;
      return {m};
    }
    case ExprKind::Symbol:
    case ExprKind::FuncSym: {
      Monomial m;
      m.coeff = Rational(1);
      m.factors.push_back({e, Rational(1)});
      return {m};
    }
    case ExprKind::Sum: {
      Poly r;
      for (const auto& c : e->children) {
        Poly p = to_poly(c);
        r.insert(r.end(), p.begin(), p.end());
        if (r.size() > kMonomialBudget)
          throw CanonicalSizeError("canonical expansion exceeds the monomial budget");
      }
      normalize_poly(r);
      return r;
    }
    case ExprKind::Product: {
      Monomial one;
      one.coeff = Rational(1);
      Poly r{one};
      for (const auto& c : e->children) r = poly_mul(r, to_poly(c));
      return r;
    }
    case ExprKind::Power:
      return power_to_poly(e->pbase, e->exponent);
  }
  return {};
}

/// Expands factors of the form (sum)^k with k a positive integer, which can
/// arise from exponent merging, until none remain.
Poly expand_integral_sum_factors(Poly p) {
  bool changed = true;
  while (changed) {
    changed = false;
    Poly out;
    for (auto& m : p) {
      std::size_t hit = m.factors.size();
      for (std::size_t i = 0; i < m.factors.size(); ++i) {
        const Factor& f = m.factors[i];
        if (f.base->kind == ExprKind::Sum && f.exp.is_integer() && f.exp.sign() > 0) {
          hit = i;
          break;
        }
      }
      if (hit == m.factors.size()) {
        out.push_back(std::move(m));
        continue;
      }
      changed = true;
      Factor f = m.factors[hit];
      Monomial rest = m;
      rest.factors.erase(rest.factors.begin() + hit);
      Poly bp = to_poly(f.base);
      Poly powed = bp;
      for (std::int64_t i = 1; i < f.exp.num(); ++i) powed = poly_mul(powed, bp);
      Poly prod = poly_mul(Poly{rest}, powed);
      out.insert(out.end(), prod.begin(), prod.end());
    }
    normalize_poly(out);
    p = std::move(out);
  }
  return p;
}

/// Multiplies through by enough positive powers of every base that occurs
/// with a negative exponent, so that the zero test reduces to a polynomial
/// zero test.  Exact: X == 0 iff X * (positive factors) == 0.
Poly clear_denominators(Poly p) {
  std::vector<Factor> need;
  for (const auto& m : p)
    for (const auto& f : m.factors) {
      if (f.exp.sign() >= 0) continue;
      Rational n = -f.exp;
      auto it = std::find_if(need.begin(), need.end(), [&](const Factor& g) {
        return compare(g.base, f.base) == 0;
      });
      if (it == need.end()) need.push_back({f.base, n});
      else if (it->exp < n) it->exp = n;
    }
  if (!need.empty()) {
    for (auto& m : p) {
      m.factors.insert(m.factors.end(), need.begin(), need.end());
      sort_and_merge_factors(m.factors);
    }
    normalize_poly(p);
  }
  return expand_integral_sum_factors(std::move(p));
}

}  // namespace

Expr canonical(const Expr& e) {
  return rebuild(expand_integral_sum_factors(to_poly(e)));
}

bool canonical_zero(const Expr& e) {
  return clear_denominators(to_poly(e)).empty();
}

std::string print(const Expr& e) { return to_string(canonical(e)); }

}  // namespace labvar
