#pragma once

#include <map>
#include <memory>
#include <string>

#include "labvar/noether.hpp"

namespace labvar {

/// Numeric physical parameters: Coriolis parameter and gravity.
struct SWParams {
  double f = 1.0;
  double g = 1.0;
};

/// Built-in gauge potentials for the rotation terms of the action densities.
/// P and R are functions of the particle position (x, y) with div-like
/// constraint dP/dx + dR/dy = f; p and r are functions of the geostrophic
/// velocity with dp/du_g + dr/dv_g = 1/f.  Different gauges change the
/// action density by a null term and leave the dynamics unchanged.
enum class Gauge { Symmetric, XWeighted, YWeighted };

std::string gauge_name(Gauge g);

struct GaugeExprs {
  Expr P, R;  ///< position-gauge pair, expressions in x, y, f
  Expr p, r;  ///< velocity-gauge pair (geostrophic model), in u_g, v_g, f
};

/// A variational model on labels (a, b) and time t: the jet space, the
/// action density, and bookkeeping about how it was built.
struct ModelSpec {
  std::shared_ptr<JetSpace> space;
  Expr lagrangian;
  std::string kind;   ///< "sw", "sg", or "custom"
  Gauge gauge = Gauge::Symmetric;
};

/// Jet space of the velocity-form model: labels (a, b, t), fields
/// (x, y, u, v), parameters f, g.
std::shared_ptr<JetSpace> velocity_space();

/// Jet space of the semi-geostrophic model: fields (x, y, u_g, v_g).
std::shared_ptr<JetSpace> geostrophic_space();

/// Gauge expressions on the given space; Symmetric: P = f x/2, R = f y/2,
/// p = u_g/(2f), r = v_g/(2f).  Construction verifies the constraints
/// canonically and throws IdentityError otherwise (also for custom pairs
/// via verify_gauge).
GaugeExprs gauge_exprs(const JetSpace& space, Gauge g);
void verify_gauge(const JetSpace& space, const GaugeExprs& ge, bool with_velocity_pair);

/// Velocity-form action density:
///   (u - R) x_t + (v + P) y_t - (u^2 + v^2 + g h)/2,  h = 1/(x_a y_b - x_b y_a).
ModelSpec velocity_model(Gauge g = Gauge::Symmetric);

/// Semi-geostrophic action density:
///   (u_g - R) x_t + (v_g + P) y_t - (u_g^2 + v_g^2 + g h)/2
///   - r u_g_t + p v_g_t.
ModelSpec geostrophic_model(Gauge g = Gauge::Symmetric);

/// Custom model: parses the density over the velocity-form space.
ModelSpec custom_model(const std::string& lagrangian_text);

// ---- invariant differential operators on the model space ----

/// Determinant of the label-to-position deformation gradient.
Expr jacobian_det(const JetSpace& space);
/// Layer depth h = 1/jacobian_det.
Expr depth(const JetSpace& space);
/// Eulerian x-derivative of a scalar expression, written in label
/// derivatives: (y_b D_a e - y_a D_b e) / det.
Expr eulerian_dx(const JetSpace& space, const Expr& e);
/// Eulerian y-derivative: (x_a D_b e - x_b D_a e) / det.
Expr eulerian_dy(const JetSpace& space, const Expr& e);

/// Potential vorticity densities (symbolic, on the respective spaces):
///   velocity form:      det * (dv/dx - du/dy + f)
///   geostrophic form:   det * (f + dv_g/dx - du_g/dy + J(u_g, v_g)/f)
Expr velocity_pv(const JetSpace& space);
Expr geostrophic_pv(const JetSpace& space);

/// Label-form residuals of the physical systems each model must reproduce;
/// keys: kinematic_x, kinematic_y, momentum_x, momentum_y.  These are built
/// from the governing equations directly, independent of the action density.
std::map<std::string, Expr> physical_residuals(const ModelSpec& model);

// ---- pointwise numeric evaluation ----

/// Point values of the deformation gradient and the velocity gradients at a
/// single label point (velocity-form model).
struct VelocitySample {
  double x_a = 1, x_b = 0, y_a = 0, y_b = 1;
  double u_a = 0, u_b = 0, v_a = 0, v_b = 0;
};

/// Same for the geostrophic model.
struct GeostrophicSample {
  double x_a = 1, x_b = 0, y_a = 0, y_b = 1;
  double ug_a = 0, ug_b = 0, vg_a = 0, vg_b = 0;
};

/// Deformation gradient, a depth field, and its label gradient at a point;
/// input for diagnosing the balanced velocity.
struct BalanceSample {
  double x_a = 1, x_b = 0, y_a = 0, y_b = 1;
  double h = 1, h_a = 0, h_b = 0;
};

double jacobian_det(double x_a, double x_b, double y_a, double y_b);

double velocity_pv(const VelocitySample& s, const SWParams& params);
double geostrophic_pv(const GeostrophicSample& s, const SWParams& params);

/// Geostrophically balanced velocity (u_g, v_g) from a depth field:
///   f u_g = -g dh/dy,   f v_g = g dh/dx.
std::pair<double, double> balanced_velocity(const BalanceSample& s, const SWParams& params);

}  // namespace labvar
