#include <doctest.h>

#include <random>

#include "labvar/canonical.hpp"
#include "labvar/swmodels.hpp"

using namespace labvar;

namespace {

bool same(const Expr& a, const Expr& b) { return canonical_zero(a - b); }

/// Sampling guard keeping the deformation gradient well away from
/// degeneracy, used whenever equivalence falls back to random evaluation.
bool det_guard(const PointBinding& bnd) {
  auto get = [&](const char* k) { return bnd.count(k) ? bnd.at(k) : 0.0; };
  return std::abs(get("x_a") * get("y_b") - get("x_b") * get("y_a")) >= 0.1;
}

SymmetryGenerator rotation_generator(const JetSpace& sp) {
  Expr x = sp.coordinate("x", ""), y = sp.coordinate("y", "");
  Expr u = sp.coordinate("u", ""), v = sp.coordinate("v", "");
  return SymmetryGenerator(sp, "rotate", {},
                           {{"x", -y}, {"y", x}, {"u", -v}, {"v", u}});
}

}  // namespace

TEST_SUITE("swmodels") {

TEST_CASE("gauge pairs satisfy their divergence constraints") {
  auto vsp = velocity_space();
  for (Gauge g : {Gauge::Symmetric, Gauge::XWeighted, Gauge::YWeighted})
    CHECK_NOTHROW(gauge_exprs(*vsp, g));
  auto gsp = geostrophic_space();
  for (Gauge g : {Gauge::Symmetric, Gauge::XWeighted, Gauge::YWeighted})
    CHECK_NOTHROW(gauge_exprs(*gsp, g));

  GaugeExprs bad;
  bad.P = vsp->parameter("f") * vsp->coordinate("x", "");
  bad.R = vsp->parameter("f") * vsp->coordinate("y", "");
  CHECK_THROWS_AS(verify_gauge(*vsp, bad, false), IdentityError);
}

TEST_CASE("label-space derivative operators invert the deformation") {
  auto sp = velocity_space();
  Expr x = sp->coordinate("x", ""), y = sp->coordinate("y", "");
  CHECK(same(eulerian_dx(*sp, x), constant(1)));
  CHECK(same(eulerian_dx(*sp, y), constant(0)));
  CHECK(same(eulerian_dy(*sp, x), constant(0)));
  CHECK(same(eulerian_dy(*sp, y), constant(1)));

  // The two operators commute on any transported scalar.
  Expr s = x * y * y;
  CHECK(canonical_zero(eulerian_dx(*sp, eulerian_dy(*sp, s)) -
                       eulerian_dy(*sp, eulerian_dx(*sp, s))));
}

TEST_CASE("velocity-form equations match the governing system") {
  ModelSpec m = velocity_model();
  const JetSpace& sp = *m.space;
  auto phys = physical_residuals(m);
  CHECK(same(euler_operator(sp, m.lagrangian, "u"), phys.at("kinematic_x")));
  CHECK(same(euler_operator(sp, m.lagrangian, "v"), phys.at("kinematic_y")));
  CHECK(same(euler_operator(sp, m.lagrangian, "x"), -phys.at("momentum_x")));
  CHECK(same(euler_operator(sp, m.lagrangian, "y"), -phys.at("momentum_y")));
}

TEST_CASE("geostrophic-form equations match the governing system") {
  ModelSpec m = geostrophic_model();
  const JetSpace& sp = *m.space;
  auto phys = physical_residuals(m);
  CHECK(same(euler_operator(sp, m.lagrangian, "u_g"), phys.at("kinematic_x")));
  CHECK(same(euler_operator(sp, m.lagrangian, "v_g"), phys.at("kinematic_y")));
  CHECK(same(euler_operator(sp, m.lagrangian, "x"), -phys.at("momentum_x")));
  CHECK(same(euler_operator(sp, m.lagrangian, "y"), -phys.at("momentum_y")));
}

TEST_CASE("equations of motion are gauge independent") {
  ModelSpec sym = velocity_model(Gauge::Symmetric);
  ModelSpec xw = velocity_model(Gauge::XWeighted);
  ModelSpec yw = velocity_model(Gauge::YWeighted);
  for (const char* dep : {"x", "y", "u", "v"}) {
    Expr e_sym = euler_operator(*sym.space, sym.lagrangian, dep);
    CHECK(same(e_sym, euler_operator(*xw.space, xw.lagrangian, dep)));
    CHECK(same(e_sym, euler_operator(*yw.space, yw.lagrangian, dep)));
  }
  ModelSpec gsym = geostrophic_model(Gauge::Symmetric);
  ModelSpec gxw = geostrophic_model(Gauge::XWeighted);
  for (const char* dep : {"x", "y", "u_g", "v_g"}) {
    CHECK(same(euler_operator(*gsym.space, gsym.lagrangian, dep),
               euler_operator(*gxw.space, gxw.lagrangian, dep)));
  }
}

TEST_CASE("translations, time shifts and relabellings leave both models invariant") {
  for (ModelSpec m : {velocity_model(), geostrophic_model()}) {
    JetSpace& sp = *m.space;
    for (const char* dir : {"a", "b", "t"}) {
      SymmetryGenerator tr(sp, std::string("shift_") + dir, {{dir, constant(1)}}, {});
      auto rep = infinitesimal_criterion(m.lagrangian, tr);
      CHECK(rep.invariant);
      CHECK(rep.canonically_zero);
    }
    SymmetryGenerator rel = relabelling_generator(sp, "chi");
    auto rep = infinitesimal_criterion(m.lagrangian, rel);
    CHECK(rep.invariant);
    CHECK(rep.canonically_zero);
  }
}

TEST_CASE("rotations are an exact symmetry only in the symmetric gauge") {
  ModelSpec sym = velocity_model(Gauge::Symmetric);
  auto rep = infinitesimal_criterion(sym.lagrangian, rotation_generator(*sym.space));
  CHECK(rep.invariant);
  CHECK(rep.canonically_zero);

  ModelSpec xw = velocity_model(Gauge::XWeighted);
  EquivalenceOptions opts;
  opts.admissible = det_guard;
  auto rep2 = infinitesimal_criterion(xw.lagrangian, rotation_generator(*xw.space), opts);
  CHECK_FALSE(rep2.invariant);
  CHECK(rep2.max_residual > 1e-6);
}

TEST_CASE("time-shift current carries minus the energy density") {
  ModelSpec m = velocity_model();
  const JetSpace& sp = *m.space;
  SymmetryGenerator shift_t(sp, "shift_t", {{"t", constant(1)}}, {});
  auto cur = noether_current(m.lagrangian, shift_t);
  Expr u = sp.coordinate("u", ""), v = sp.coordinate("v", "");
  Expr energy = constant(Rational(1, 2)) *
                (u * u + v * v + sp.parameter("g") * depth(sp));
  CHECK(same(cur.components.at("t"), -energy));
}

TEST_CASE("relabelling current: spatial flux is a pure stream-function flow") {
  ModelSpec m = velocity_model();
  JetSpace& sp = *m.space;
  SymmetryGenerator rel = relabelling_generator(sp, "chi");
  auto cur = noether_current(m.lagrangian, rel);

  // The spatial components reduce to (M chi_b, -M chi_a) with
  // M = L - (g/2) h: the density minus the depth pressure-energy.
  Expr M = m.lagrangian -
           constant(Rational(1, 2)) * sp.parameter("g") * depth(sp);
  Expr chi_a = func_symbol("chi", {"a", "b"}, {1, 0});
  Expr chi_b = func_symbol("chi", {"a", "b"}, {0, 1});
  CHECK(same(cur.components.at("a"), M * chi_b));
  CHECK(same(cur.components.at("b"), -(M * chi_a)));

  // Its time component is linear in the stream-function gradient.
  Expr xa = sp.coordinate("x", "a"), xb = sp.coordinate("x", "b");
  Expr ya = sp.coordinate("y", "a"), yb = sp.coordinate("y", "b");
  Expr u = sp.coordinate("u", ""), v = sp.coordinate("v", "");
  GaugeExprs ge = gauge_exprs(sp, Gauge::Symmetric);
  Expr px = u - ge.R, py = v + ge.P;
  Expr expect_t = -(chi_b * (xa * px + ya * py)) + chi_a * (xb * px + yb * py);
  CHECK(same(cur.components.at("t"), expect_t));
}

TEST_CASE("momentum curl reproduces minus the potential vorticity") {
  for (Gauge g : {Gauge::Symmetric, Gauge::XWeighted, Gauge::YWeighted}) {
    ModelSpec m = velocity_model(g);
    Expr pv = pv_from_momenta(m.lagrangian, *m.space);
    CHECK(same(pv, -velocity_pv(*m.space)));
  }
  ModelSpec sg = geostrophic_model();
  Expr pv = pv_from_momenta(sg.lagrangian, *sg.space);
  CHECK(same(pv, -geostrophic_pv(*sg.space)));
}

TEST_CASE("momentum curl matches the pointwise evaluators numerically") {
  ModelSpec m = velocity_model();
  Expr pv_expr = pv_from_momenta(m.lagrangian, *m.space);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  int tested = 0;
  while (tested < 100) {
    PointBinding bnd;
    for (const auto& s : free_symbols(pv_expr)) bnd[s->display()] = dist(rng);
    bnd["f"] = 0.7;
    if (!det_guard(bnd)) continue;
    ++tested;
    VelocitySample smp;
    smp.x_a = bnd["x_a"]; smp.x_b = bnd["x_b"];
    smp.y_a = bnd["y_a"]; smp.y_b = bnd["y_b"];
    smp.u_a = bnd["u_a"]; smp.u_b = bnd["u_b"];
    smp.v_a = bnd["v_a"]; smp.v_b = bnd["v_b"];
    const double direct = -velocity_pv(smp, SWParams{0.7, 1.0});
    const double viaL = evaluate(pv_expr, bnd);
    CHECK(std::abs(direct - viaL) <= 1e-9 * (1.0 + std::abs(direct)));
  }
}

TEST_CASE("pointwise vorticity evaluators reproduce closed-form flows") {
  SWParams prm{0.8, 1.3};

  // Undisturbed rest state: pure planetary contribution.
  CHECK(velocity_pv(VelocitySample{}, prm) == doctest::Approx(prm.f).epsilon(1e-14));
  CHECK(geostrophic_pv(GeostrophicSample{}, prm) == doctest::Approx(prm.f).epsilon(1e-14));

  // Linear shear u = c * y reduces the vorticity by c.
  const double c = 0.35;
  VelocitySample shear;
  shear.u_b = c;  // u = c*b with identity deformation, so du/dy = c
  CHECK(velocity_pv(shear, prm) == doctest::Approx(prm.f - c).epsilon(1e-14));

  // Solid rotation of the geostrophic wind: u_g = -c y, v_g = c x.
  GeostrophicSample rot;
  rot.ug_b = -c;
  rot.vg_a = c;
  CHECK(geostrophic_pv(rot, prm) ==
        doctest::Approx(prm.f + 2 * c + c * c / prm.f).epsilon(1e-13));

  // Degenerate deformation gradients are rejected.
  VelocitySample degen;
  degen.x_a = 0; degen.y_b = 0;
  CHECK_THROWS_AS(velocity_pv(degen, prm), std::domain_error);
  CHECK_THROWS_AS(geostrophic_pv(GeostrophicSample{}, SWParams{0.0, 1.0}),
                  std::domain_error);
}

TEST_CASE("balanced velocity diagnoses a tilted interface") {
  SWParams prm{0.9, 2.0};
  const double eps = 0.01;
  BalanceSample s;
  s.h = 1.0;
  s.h_b = eps;  // depth rising along b = y
  auto [ug, vg] = balanced_velocity(s, prm);
  CHECK(ug == doctest::Approx(-prm.g * eps / prm.f).epsilon(1e-14));
  CHECK(vg == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("potential vorticity is invariant under unimodular relabelling") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  SWParams prm{1.1, 1.0};
  // Unimodular matrices (det = 1) acting on the label plane.
  const double mats[][4] = {{2, 1, 1, 1}, {1, -1, 0, 1}, {3, 2, 4, 3}};
  int done = 0;
  while (done < 20) {
    VelocitySample s;
    s.x_a = 1 + dist(rng); s.x_b = dist(rng);
    s.y_a = dist(rng); s.y_b = 1 + dist(rng);
    s.u_a = dist(rng); s.u_b = dist(rng);
    s.v_a = dist(rng); s.v_b = dist(rng);
    if (std::abs(jacobian_det(s.x_a, s.x_b, s.y_a, s.y_b)) < 0.1) continue;
    ++done;
    const double before = velocity_pv(s, prm);
    for (const auto& m : mats) {
      // New labels (a', b') with (a, b) = M (a', b'): chain rule on rows.
      VelocitySample r;
      r.x_a = m[0] * s.x_a + m[2] * s.x_b;
      r.x_b = m[1] * s.x_a + m[3] * s.x_b;
      r.y_a = m[0] * s.y_a + m[2] * s.y_b;
      r.y_b = m[1] * s.y_a + m[3] * s.y_b;
      r.u_a = m[0] * s.u_a + m[2] * s.u_b;
      r.u_b = m[1] * s.u_a + m[3] * s.u_b;
      r.v_a = m[0] * s.v_a + m[2] * s.v_b;
      r.v_b = m[1] * s.v_a + m[3] * s.v_b;
      const double after = velocity_pv(r, prm);
      CHECK(std::abs(after - before) <= 1e-12 * (1.0 + std::abs(before)));
    }
  }
}

TEST_CASE("custom densities parse over the velocity-form coordinates") {
  ModelSpec m = custom_model("u*x_t + v*y_t - 0.5*(u^2 + v^2)");
  CHECK(m.kind == "custom");
  // This density is pressureless: equations close without the depth term.
  CHECK(same(euler_operator(*m.space, m.lagrangian, "x"),
             -m.space->coordinate("u", "t")));
}

}  // TEST_SUITE
