#include "labvar/streams.hpp"

#include <cmath>

namespace labvar {

LinearStream::LinearStream(std::string label, double ca, double cb, double c0)
    : label_(std::move(label)), ca_(ca), cb_(cb), c0_(c0) {}

StreamFunction::Values LinearStream::eval(int, const std::array<double, 3>&,
                                          double a, double b) const {
  return {c0_ + ca_ * a + cb_ * b, ca_, cb_};
}

FieldStream::FieldStream(SpatialField field, std::string label)
    : field_(std::move(field)), label_(std::move(label)) {
  if (!field_.space) throw FEError("field stream needs a space");
  if (field_.coeffs.size() !=
      static_cast<std::size_t>(field_.space->n_dofs())) {
    throw FEError("field stream coefficient count does not match the space");
  }
}

StreamFunction::Values FieldStream::eval(int tri,
                                         const std::array<double, 3>& bary,
                                         double, double) const {
  const FESpace& sp = *field_.space;
  thread_local std::vector<ShapeValues> sv;
  sp.shape(bary[1], bary[2], sv);
  const CellGeometry geo = sp.cell_geometry(tri);
  Values out;
  for (int j = 0; j < sp.dofs_per_cell(); ++j) {
    const double c = field_.coeffs[static_cast<std::size_t>(sp.cell_dof(tri, j))];
    out.value += c * sv[j].N;
    const double da = geo.Jinv[0][0] * sv[j].d_xi + geo.Jinv[1][0] * sv[j].d_eta;
    const double db = geo.Jinv[0][1] * sv[j].d_xi + geo.Jinv[1][1] * sv[j].d_eta;
    out.da += c * da;
    out.db += c * db;
  }
  return out;
}

FieldStream hat_stream(std::shared_ptr<const FESpace> space, int dof) {
  if (dof < 0 || dof >= space->n_dofs()) {
    throw FEError("hat stream dof index out of range");
  }
  SpatialField f;
  f.space = std::move(space);
  f.coeffs.assign(static_cast<std::size_t>(f.space->n_dofs()), 0.0);
  f.coeffs[static_cast<std::size_t>(dof)] = 1.0;
  return FieldStream(std::move(f), "hat[" + std::to_string(dof) + "]");
}

QuinticBumpStream::QuinticBumpStream(double center_a, double center_b,
                                     double radius, const LabelMesh* wrap)
    : ca_(center_a), cb_(center_b), radius_(radius) {
  if (!(radius > 0)) throw FEError("bump radius must be positive");
  if (wrap != nullptr && wrap->periodic()) {
    wrap_ = true;
    La_ = wrap->La();
    Lb_ = wrap->Lb();
    if (!(radius < 0.5 * std::min(La_, Lb_))) {
      throw FEError("bump radius must be below half the shorter period");
    }
  }
}

StreamFunction::Values QuinticBumpStream::eval(
    int, const std::array<double, 3>&, double a, double b) const {
  double da = a - ca_;
  double db = b - cb_;
  if (wrap_) {
    da -= La_ * std::round(da / La_);
    db -= Lb_ * std::round(db / Lb_);
  }
  const double r = std::sqrt(da * da + db * db);
  const double s = r / radius_;
  if (s >= 1.0) return {};
  Values out;
  out.value = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  if (r > 0.0) {
    // dq/ds = -30 s^2 (1 - s)^2; chain rule through s = r / radius.
    const double one_s = 1.0 - s;
    const double dq_dr = -30.0 * s * s * one_s * one_s / radius_;
    out.da = dq_dr * da / r;
    out.db = dq_dr * db / r;
  }
  return out;
}

FieldStream interpolate_stream(std::shared_ptr<const FESpace> space,
                               const StreamFunction& f, std::string label) {
  SpatialField out;
  out.space = space;
  out.coeffs.resize(static_cast<std::size_t>(space->n_dofs()));
  for (int d = 0; d < space->n_dofs(); ++d) {
    const auto p = space->dof_coord(d);
    out.coeffs[static_cast<std::size_t>(d)] =
        f.eval(0, {1.0, 0.0, 0.0}, p[0], p[1]).value;
  }
  return FieldStream(std::move(out), std::move(label));
}

}  // namespace labvar
