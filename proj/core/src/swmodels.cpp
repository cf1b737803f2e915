#include "labvar/swmodels.hpp"

#include <cmath>

#include "labvar/canonical.hpp"
#include "labvar/parse.hpp"

namespace labvar {

namespace {

Expr half() { return constant(Rational(1, 2)); }

void check_nonzero_det(double det) {
  if (det == 0.0 || !std::isfinite(det))
    throw std::domain_error("degenerate deformation gradient: determinant is " +
                            std::to_string(det));
}

}  // namespace

std::string gauge_name(Gauge g) {
  switch (g) {
    case Gauge::Symmetric: return "symmetric";
    case Gauge::XWeighted: return "x-weighted";
    case Gauge::YWeighted: return "y-weighted";
  }
  return "?";
}

std::shared_ptr<JetSpace> velocity_space() {
  return std::make_shared<JetSpace>(
      std::vector<std::string>{"a", "b", "t"},
      std::vector<std::string>{"x", "y", "u", "v"},
      std::vector<std::string>{"f", "g"});
}

std::shared_ptr<JetSpace> geostrophic_space() {
  return std::make_shared<JetSpace>(
      std::vector<std::string>{"a", "b", "t"},
      std::vector<std::string>{"x", "y", "u_g", "v_g"},
      std::vector<std::string>{"f", "g"});
}

void verify_gauge(const JetSpace& space, const GaugeExprs& ge, bool with_velocity_pair) {
  Expr f = space.parameter("f");
  Expr x = space.coordinate("x", "");
  Expr y = space.coordinate("y", "");
  if (!canonical_zero(partial(ge.P, x) + partial(ge.R, y) - f))
    throw IdentityError("gauge pair (P, R) violates dP/dx + dR/dy = f: P = " +
                        print(ge.P) + ", R = " + print(ge.R));
  if (with_velocity_pair) {
    Expr ug = space.coordinate("u_g", "");
    Expr vg = space.coordinate("v_g", "");
    if (!canonical_zero(partial(ge.p, ug) + partial(ge.r, vg) - pow(f, -1)))
      throw IdentityError("gauge pair (p, r) violates dp/du_g + dr/dv_g = 1/f: p = " +
                          print(ge.p) + ", r = " + print(ge.r));
  }
}

GaugeExprs gauge_exprs(const JetSpace& space, Gauge g) {
  Expr f = space.parameter("f");
  Expr x = space.coordinate("x", "");
  Expr y = space.coordinate("y", "");
  const bool geo = space.has_dependent("u_g");
  Expr ug = geo ? space.coordinate("u_g", "") : Expr{};
  Expr vg = geo ? space.coordinate("v_g", "") : Expr{};
  GaugeExprs ge;
  switch (g) {
    case Gauge::Symmetric:
      ge.P = half() * f * x;
      ge.R = half() * f * y;
      if (geo) {
        ge.p = half() * ug * pow(f, -1);
        ge.r = half() * vg * pow(f, -1);
      }
      break;
    case Gauge::XWeighted:
      ge.P = f * x;
      ge.R = constant(0);
      if (geo) {
        ge.p = ug * pow(f, -1);
        ge.r = constant(0);
      }
      break;
    case Gauge::YWeighted:
      ge.P = constant(0);
      ge.R = f * y;
      if (geo) {
        ge.p = constant(0);
        ge.r = vg * pow(f, -1);
      }
      break;
  }
  verify_gauge(space, ge, geo);
  return ge;
}

Expr jacobian_det(const JetSpace& space) {
  return space.coordinate("x", "a") * space.coordinate("y", "b") -
         space.coordinate("x", "b") * space.coordinate("y", "a");
}

Expr depth(const JetSpace& space) { return pow(jacobian_det(space), -1); }

Expr eulerian_dx(const JetSpace& space, const Expr& e) {
  Expr da = total_derivative(space, e, "a");
  Expr db = total_derivative(space, e, "b");
  return (space.coordinate("y", "b") * da - space.coordinate("y", "a") * db) *
         depth(space);
}

Expr eulerian_dy(const JetSpace& space, const Expr& e) {
  Expr da = total_derivative(space, e, "a");
  Expr db = total_derivative(space, e, "b");
  return (space.coordinate("x", "a") * db - space.coordinate("x", "b") * da) *
         depth(space);
}

ModelSpec velocity_model(Gauge g) {
  ModelSpec m;
  m.space = velocity_space();
  m.kind = "sw";
  m.gauge = g;
  const JetSpace& sp = *m.space;
  GaugeExprs ge = gauge_exprs(sp, g);
  Expr u = sp.coordinate("u", ""), v = sp.coordinate("v", "");
  Expr xt = sp.coordinate("x", "t"), yt = sp.coordinate("y", "t");
  Expr gg = sp.parameter("g");
  m.lagrangian = (u - ge.R) * xt + (v + ge.P) * yt -
                 half() * (u * u + v * v + gg * depth(sp));
  return m;
}

ModelSpec geostrophic_model(Gauge g) {
  ModelSpec m;
  m.space = geostrophic_space();
  m.kind = "sg";
  m.gauge = g;
  const JetSpace& sp = *m.space;
  GaugeExprs ge = gauge_exprs(sp, g);
  Expr ug = sp.coordinate("u_g", ""), vg = sp.coordinate("v_g", "");
  Expr xt = sp.coordinate("x", "t"), yt = sp.coordinate("y", "t");
  Expr ugt = sp.coordinate("u_g", "t"), vgt = sp.coordinate("v_g", "t");
  Expr gg = sp.parameter("g");
  m.lagrangian = (ug - ge.R) * xt + (vg + ge.P) * yt -
                 half() * (ug * ug + vg * vg + gg * depth(sp)) - ge.r * ugt +
                 ge.p * vgt;
  return m;
}

ModelSpec custom_model(const std::string& lagrangian_text) {
  ModelSpec m;
  m.space = velocity_space();
  m.kind = "custom";
  m.lagrangian = parse_expression(lagrangian_text, *m.space);
  return m;
}

Expr velocity_pv(const JetSpace& space) {
  Expr zeta = eulerian_dx(space, space.coordinate("v", "")) -
              eulerian_dy(space, space.coordinate("u", ""));
  return jacobian_det(space) * (zeta + space.parameter("f"));
}

Expr geostrophic_pv(const JetSpace& space) {
  Expr f = space.parameter("f");
  Expr ug = space.coordinate("u_g", ""), vg = space.coordinate("v_g", "");
  Expr zeta = eulerian_dx(space, vg) - eulerian_dy(space, ug);
  Expr jac_uv = eulerian_dx(space, ug) * eulerian_dy(space, vg) -
                eulerian_dy(space, ug) * eulerian_dx(space, vg);
  return jacobian_det(space) * (f + zeta + jac_uv * pow(f, -1));
}

std::map<std::string, Expr> physical_residuals(const ModelSpec& model) {
  const JetSpace& sp = *model.space;
  Expr f = sp.parameter("f"), gg = sp.parameter("g");
  Expr h = depth(sp);
  Expr xt = sp.coordinate("x", "t"), yt = sp.coordinate("y", "t");
  std::map<std::string, Expr> out;
  if (model.kind == "sg") {
    Expr ug = sp.coordinate("u_g", ""), vg = sp.coordinate("v_g", "");
    Expr ugt = sp.coordinate("u_g", "t"), vgt = sp.coordinate("v_g", "t");
    out["kinematic_x"] = xt - ug + vgt * pow(f, -1);
    out["kinematic_y"] = yt - vg - ugt * pow(f, -1);
    out["momentum_x"] = ugt - f * yt + gg * eulerian_dx(sp, h);
    out["momentum_y"] = vgt + f * xt + gg * eulerian_dy(sp, h);
  } else {
    Expr u = sp.coordinate("u", ""), v = sp.coordinate("v", "");
    Expr ut = sp.coordinate("u", "t"), vt = sp.coordinate("v", "t");
    out["kinematic_x"] = xt - u;
    out["kinematic_y"] = yt - v;
    out["momentum_x"] = ut - f * yt + gg * eulerian_dx(sp, h);
    out["momentum_y"] = vt + f * xt + gg * eulerian_dy(sp, h);
  }
  return out;
}

double jacobian_det(double x_a, double x_b, double y_a, double y_b) {
  return x_a * y_b - x_b * y_a;
}

double velocity_pv(const VelocitySample& s, const SWParams& params) {
  const double det = jacobian_det(s.x_a, s.x_b, s.y_a, s.y_b);
  check_nonzero_det(det);
  const double dvdx = (s.y_b * s.v_a - s.y_a * s.v_b) / det;
  const double dudy = (s.x_a * s.u_b - s.x_b * s.u_a) / det;
  return det * (dvdx - dudy + params.f);
}

double geostrophic_pv(const GeostrophicSample& s, const SWParams& params) {
  if (params.f == 0.0)
    throw std::domain_error("geostrophic diagnostics need a nonzero Coriolis parameter");
  const double det = jacobian_det(s.x_a, s.x_b, s.y_a, s.y_b);
  check_nonzero_det(det);
  const double dugdx = (s.y_b * s.ug_a - s.y_a * s.ug_b) / det;
  const double dugdy = (s.x_a * s.ug_b - s.x_b * s.ug_a) / det;
  const double dvgdx = (s.y_b * s.vg_a - s.y_a * s.vg_b) / det;
  const double dvgdy = (s.x_a * s.vg_b - s.x_b * s.vg_a) / det;
  const double jac_uv = dugdx * dvgdy - dugdy * dvgdx;
  return det * (params.f + dvgdx - dugdy + jac_uv / params.f);
}

std::pair<double, double> balanced_velocity(const BalanceSample& s,
                                            const SWParams& params) {
  if (params.f == 0.0)
    throw std::domain_error("balanced velocity needs a nonzero Coriolis parameter");
  const double det = jacobian_det(s.x_a, s.x_b, s.y_a, s.y_b);
  check_nonzero_det(det);
  const double dhdx = (s.y_b * s.h_a - s.y_a * s.h_b) / det;
  const double dhdy = (s.x_a * s.h_b - s.x_b * s.h_a) / det;
  return {-(params.g / params.f) * dhdy, (params.g / params.f) * dhdx};
}

}  // namespace labvar
