#include <doctest.h>

#include <cmath>
#include <random>

#include "labvar/calculus.hpp"
#include "labvar/canonical.hpp"
#include "labvar/numeric.hpp"
#include "labvar/parse.hpp"

using namespace labvar;

namespace {

/// Central finite difference of `e` in the coordinate `coord` at `at`.
double fd_partial(const Expr& e, const std::string& coord, PointBinding at,
                  double h = 1e-6) {
  at[coord] += h;
  const double up = evaluate(e, at);
  at[coord] -= 2 * h;
  const double dn = evaluate(e, at);
  return (up - dn) / (2 * h);
}

PointBinding random_binding(const Expr& e, std::mt19937_64& rng, double lo = 0.5,
                            double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  PointBinding b;
  for (const auto& s : free_symbols(e)) b[s->display()] = dist(rng);
  for (const auto& f : func_nodes(e)) b[f->display()] = dist(rng);
  return b;
}

bool same(const Expr& a, const Expr& b) { return canonical_zero(a - b); }

}  // namespace

TEST_SUITE("symexpr") {

TEST_CASE("rational arithmetic is exact and normalized") {
  Rational a(6, -4);
  CHECK(a.num() == -3);
  CHECK(a.den() == 2);
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK((Rational(2, 3) * Rational(9, 4)) == Rational(3, 2));
  CHECK(Rational::int_pow(Rational(2, 3), -2) == Rational(9, 4));
  CHECK(Rational(5).str() == "5");
  CHECK(Rational(-3, 2).str() == "-3/2");
  CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
  CHECK_THROWS_AS(Rational(INT64_MAX) * Rational(2), OverflowError);
}

TEST_CASE("canonical printing is deterministic and ordered") {
  JetSpace sp({"a", "b", "t"}, {"x", "y", "u", "v"}, {"f", "g"});
  Expr xa = sp.coordinate("x", "a"), xb = sp.coordinate("x", "b");
  Expr ya = sp.coordinate("y", "a"), yb = sp.coordinate("y", "b");
  Expr jac = xa * yb - xb * ya;
  CHECK(print(jac) == "x_a*y_b - x_b*y_a");
  // Operand order does not matter after canonicalization.
  CHECK(print(-(ya * xb) + yb * xa) == "x_a*y_b - x_b*y_a");
  CHECK(print(pow(jac, -1)) == "(x_a*y_b - x_b*y_a)^(-1)");
  Expr u = sp.coordinate("u", "");
  CHECK(print(u * u - constant(Rational(1, 2)) * u) == "-1/2*u + u^2");
  CHECK(print((u + constant(1)) * (u - constant(1)) - u * u) == "-1");
}

TEST_CASE("polynomial and rational identities canonicalize to zero") {
  JetSpace sp({"a", "b", "t"}, {"x", "y"}, {});
  Expr xa = sp.coordinate("x", "a"), xb = sp.coordinate("x", "b");
  Expr ya = sp.coordinate("y", "a"), yb = sp.coordinate("y", "b");
  Expr jac = xa * yb - xb * ya;
  CHECK(canonical_zero(pow(xa + ya, 2) - (xa * xa + constant(2) * xa * ya + ya * ya)));
  CHECK(canonical_zero(jac * pow(jac, -1) - constant(1)));
  // Mixed denominators clear correctly.
  CHECK(canonical_zero(xa * yb * pow(jac, -1) - xb * ya * pow(jac, -1) - constant(1)));
  CHECK(canonical_zero(pow(jac, -2) * jac - pow(jac, -1)));
  // Fractional powers merge only on identical bases.
  Expr s = constant(1) + xa * xa;
  CHECK(canonical_zero(pow(s, Rational(1, 2)) * pow(s, Rational(1, 2)) - s));
  CHECK(canonical_zero(pow(s, Rational(-5, 2)) * s * s - pow(s, Rational(-1, 2))));
  // (x^2)^(1/2) must not collapse to x.
  CHECK_FALSE(canonical_zero(pow(pow(xa, 2), Rational(1, 2)) - xa));
}

TEST_CASE("partial derivatives match finite differences") {
  JetSpace sp({"a", "b", "t"}, {"x", "y", "u", "v"}, {"f", "g"});
  Expr xa = sp.coordinate("x", "a"), xb = sp.coordinate("x", "b");
  Expr ya = sp.coordinate("y", "a"), yb = sp.coordinate("y", "b");
  Expr u = sp.coordinate("u", ""), xt = sp.coordinate("x", "t");
  Expr ua = sp.coordinate("u", "a");
  Expr f = sp.parameter("f"), g = sp.parameter("g");
  Expr jac = xa * yb - xb * ya;
  Expr e = u * xt + g * pow(jac, -1) + f * pow(constant(1) + ua * ua, Rational(-1, 2));

  std::mt19937_64 rng(7);
  for (const auto& c : free_symbols(e)) {
    if (c->role == SymbolRole::Parameter) continue;
    Expr de = partial(e, c);
    for (int trial = 0; trial < 20; ++trial) {
      PointBinding at = random_binding(e, rng);
      const double sym = evaluate(de, at);
      const double fd = fd_partial(e, c->display(), at);
      CHECK(std::abs(sym - fd) <= 1e-6 * (1.0 + std::abs(sym)));
    }
  }
}

TEST_CASE("simple partials reduce to closed forms") {
  JetSpace sp({"x"}, {"u"});
  Expr ux = sp.coordinate("u", "x");
  CHECK(same(partial(constant(Rational(1, 2)) * ux * ux, ux), ux));
  CHECK(same(partial(ux, sp.coordinate("u", "")), constant(0)));
  CHECK_THROWS_AS(partial(ux, sp.coordinate("u", "x") * ux), std::invalid_argument);
}

TEST_CASE("total derivative expands explicit and chained dependence") {
  JetSpace sp({"a", "b", "t"}, {"x", "y"}, {"f"});
  Expr xa = sp.coordinate("x", "a"), xb = sp.coordinate("x", "b");
  Expr ya = sp.coordinate("y", "a"), yb = sp.coordinate("y", "b");
  Expr jac = xa * yb - xb * ya;
  Expr expect = sp.coordinate("x", "at") * yb + xa * sp.coordinate("y", "bt") -
                sp.coordinate("x", "bt") * ya - xb * sp.coordinate("y", "at");
  CHECK(same(total_derivative(sp, jac, "t"), expect));
  CHECK(same(total_derivative(sp, sp.independent("a") * sp.parameter("f"), "a"),
             sp.parameter("f")));

  // Leibniz rule and commutativity of total derivatives, exactly.
  Expr e1 = xa * pow(jac, -1);
  Expr e2 = yb + sp.independent("a") * xb;
  CHECK(canonical_zero(total_derivative(sp, e1 * e2, "b") -
                       total_derivative(sp, e1, "b") * e2 -
                       e1 * total_derivative(sp, e2, "b")));
  Expr dab = total_derivative(sp, total_derivative(sp, e1, "a"), "b");
  Expr dba = total_derivative(sp, total_derivative(sp, e1, "b"), "a");
  CHECK(canonical_zero(dab - dba));
}

TEST_CASE("derivative order beyond the supported jet range is an error") {
  JetSpace sp({"x"}, {"u"});
  Expr top = sp.coordinate("u", "xxxx");
  CHECK_THROWS_AS(total_derivative(sp, top, "x"), JetSpaceError);
  CHECK_THROWS_AS(sp.coordinate("u", "xxxxx"), JetSpaceError);
}

TEST_CASE("opaque functions differentiate through their arguments") {
  JetSpace sp({"a", "b", "t"}, {"x", "y"}, {"f"});
  Expr P = sp.declare_function("P", {"x", "y"});
  Expr x = sp.coordinate("x", ""), y = sp.coordinate("y", "");
  Expr Px = partial(P, x);
  CHECK(Px->display() == "P_x");
  CHECK(same(partial(P, sp.coordinate("x", "a")), constant(0)));
  Expr expect = func_symbol("P", {"x", "y"}, {1, 0}) * sp.coordinate("x", "a") +
                func_symbol("P", {"x", "y"}, {0, 1}) * sp.coordinate("y", "a");
  CHECK(same(total_derivative(sp, P, "a"), expect));

  // Substituting a concrete gauge maps derivative nodes consistently.
  Expr half_fx = constant(Rational(1, 2)) * sp.parameter("f") * x;
  Expr da = total_derivative(sp, P, "a");
  Expr sub = substitute_function(sp, da, "P", half_fx);
  CHECK(same(sub, constant(Rational(1, 2)) * sp.parameter("f") * sp.coordinate("x", "a")));
}

TEST_CASE("variational derivative recovers classical results") {
  JetSpace sp({"x"}, {"u"});
  Expr u = sp.coordinate("u", ""), ux = sp.coordinate("u", "x");
  Expr half = constant(Rational(1, 2));
  CHECK(same(euler_operator(sp, half * ux * ux, "u"), -sp.coordinate("u", "xx")));
  CHECK(same(euler_operator(sp, sp.independent("x") * ux, "u"), constant(-1)));
  CHECK(same(euler_operator(sp, half * u * u, "u"), u));

  // Total derivatives are annihilated, including through second order.
  Expr F = sp.independent("x") * u * u + u * ux;
  CHECK(canonical_zero(euler_operator(sp, total_derivative(sp, F, "x"), "u")));
}

TEST_CASE("variational derivative annihilates divergences in two variables") {
  JetSpace sp({"a", "b"}, {"u"});
  Expr u = sp.coordinate("u", ""), ua = sp.coordinate("u", "a"), ub = sp.coordinate("u", "b");
  Expr F = u * ub + sp.independent("a") * u;
  Expr G = u * ua * ua;
  Expr div = total_derivative(sp, F, "a") + total_derivative(sp, G, "b");
  CHECK(canonical_zero(euler_operator(sp, div, "u")));
}

TEST_CASE("equivalence decides by canonical form first, sampling second") {
  JetSpace sp({"a", "b", "t"}, {"x", "y"});
  Expr xa = sp.coordinate("x", "a"), ya = sp.coordinate("y", "a");
  auto r1 = check_equivalent(pow(xa + ya, 2), xa * xa + constant(2) * xa * ya + ya * ya);
  CHECK(r1.equivalent);
  CHECK(r1.canonically_zero);

  // Equal as functions but only detectable numerically.
  Expr one_px = constant(1) + xa;
  Expr one_py = constant(1) + ya;
  auto r2 = check_equivalent(pow(one_px, Rational(1, 2)) * pow(one_py, Rational(1, 2)),
                             pow(one_px * one_py, Rational(1, 2)));
  CHECK(r2.equivalent);
  CHECK_FALSE(r2.canonically_zero);
  CHECK(r2.trials_used == 100);

  // Genuinely different expressions are rejected.
  auto r3 = check_equivalent(pow(pow(one_px, 2), Rational(1, 2)), one_px);
  CHECK_FALSE(r3.equivalent);

  // Admissibility filters reshape the sample set; impossible filters throw.
  EquivalenceOptions opts;
  opts.admissible = [](const PointBinding& b) { return b.at("x_a") > 0; };
  CHECK(check_equivalent(pow(pow(xa, 2), Rational(1, 2)), xa, opts).equivalent);
  opts.admissible = [](const PointBinding&) { return false; };
  CHECK_THROWS_AS(check_equivalent(xa, xa + constant(1), opts), std::runtime_error);
}

TEST_CASE("division by zero and domain errors carry the offending subtree") {
  JetSpace sp({"a", "b", "t"}, {"x", "y"});
  Expr xa = sp.coordinate("x", "a");
  PointBinding b{{"x_a", 0.0}};
  CHECK_THROWS_AS(evaluate(pow(xa, -1), b), EvalError);
  PointBinding bn{{"x_a", -1.0}};
  CHECK_THROWS_AS(evaluate(pow(xa, Rational(1, 2)), bn), EvalError);
  try {
    evaluate(constant(2) * pow(xa, -1), b);
    CHECK(false);
  } catch (const EvalError& err) {
    CHECK(err.where()->kind == ExprKind::Power);
  }
  CHECK_THROWS_AS(evaluate(xa + sp.coordinate("y", "b"), b), EvalError);
}

TEST_CASE("parser round-trips canonical output and reports errors") {
  JetSpace sp({"a", "b", "t"}, {"x", "y", "u", "v"}, {"f", "g"});
  sp.declare_function("P", {"x", "y"});
  Expr xa = sp.coordinate("x", "a"), yb = sp.coordinate("y", "b");
  Expr xb = sp.coordinate("x", "b"), ya = sp.coordinate("y", "a");
  Expr u = sp.coordinate("u", ""), v = sp.coordinate("v", "");
  Expr jac = xa * yb - xb * ya;

  for (const Expr& e :
       {jac, pow(jac, -1), u * sp.coordinate("x", "t") - constant(Rational(1, 2)) * (u * u + v * v),
        sp.parameter("g") * pow(constant(1) + u * u, Rational(-5, 2))}) {
    Expr back = parse_expression(print(e), sp);
    CHECK(same(back, e));
  }

  CHECK(same(parse_expression("0.5*u", sp), constant(Rational(1, 2)) * u));
  CHECK(same(parse_expression("P(x, y)*f", sp),
             func_symbol("P", {"x", "y"}, {0, 0}) * sp.parameter("f")));
  CHECK(same(parse_expression("-u^2", sp), -(u * u)));
  CHECK(same(parse_expression("2^(-1)*u", sp), constant(Rational(1, 2)) * u));

  CHECK_THROWS_AS(parse_expression("u + w", sp), ParseError);
  CHECK_THROWS_AS(parse_expression("u ^ v", sp), ParseError);
  CHECK_THROWS_AS(parse_expression("u + ", sp), ParseError);
  CHECK_THROWS_AS(parse_expression("u 2", sp), ParseError);
  CHECK_THROWS_AS(parse_expression("P(y, x)", sp), ParseError);
}

TEST_CASE("jet space validates its construction and lookups") {
  CHECK_THROWS_AS(JetSpace({}, {"u"}), JetSpaceError);
  CHECK_THROWS_AS(JetSpace({"a", "b", "c", "d"}, {"u"}), JetSpaceError);
  CHECK_THROWS_AS(JetSpace({"a"}, {"a"}), JetSpaceError);
  CHECK_THROWS_AS(JetSpace({"ab"}, {"u"}), JetSpaceError);
  CHECK_THROWS_AS(JetSpace({"a"}, {"u"}, {"u"}), JetSpaceError);

  JetSpace sp({"a", "b", "t"}, {"x", "u_g"}, {"f"});
  CHECK(sp.lookup("x_ab").has_value());
  CHECK((*sp.lookup("x_ab"))->base == "x");
  CHECK(sp.lookup("u_g_a").has_value());
  CHECK((*sp.lookup("u_g_a"))->base == "u_g");
  CHECK((*sp.lookup("u_g_a"))->index == std::vector<std::string>{"a"});
  CHECK(sp.lookup("f").has_value());
  CHECK_FALSE(sp.lookup("q").has_value());
  CHECK_FALSE(sp.lookup("x_q").has_value());
  CHECK_THROWS_AS(sp.coordinate("w", "a"), JetSpaceError);
  CHECK_THROWS_AS(sp.coordinate("x", "aq"), JetSpaceError);
  CHECK_THROWS_AS(sp.declare_function("x", {"a"}), JetSpaceError);
  CHECK_THROWS_AS(sp.declare_function("Q", {"x_a"}), JetSpaceError);
}

}  // TEST_SUITE
