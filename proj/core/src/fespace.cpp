#include "labvar/fespace.hpp"

#include <algorithm>
#include <cmath>

namespace labvar {

TimeSlabs::TimeSlabs(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) {
    throw FEError("time slabs need at least two knots");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw FEError("time knots must be strictly increasing");
    }
  }
}

int TimeSlabs::locate(double t) const {
  const double span = knots_.back() - knots_.front();
  const double tol = 1e-12 * std::max(1.0, std::abs(knots_.front()) +
                                               std::abs(knots_.back()) + span);
  if (t < knots_.front() - tol || t > knots_.back() + tol) {
    throw FEError("time " + std::to_string(t) + " lies outside the slab "
                  "range [" + std::to_string(knots_.front()) + ", " +
                  std::to_string(knots_.back()) + "]");
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  int n = static_cast<int>(it - knots_.begin()) - 1;
  n = std::clamp(n, 0, n_slabs() - 1);
  return n;
}

TimeSlabs uniform_slabs(double t0, double t1, int n_slabs) {
  if (n_slabs < 1) throw FEError("need at least one time slab");
  if (!(t1 > t0)) throw FEError("time interval must have positive length");
  std::vector<double> knots(static_cast<std::size_t>(n_slabs) + 1);
  for (int i = 0; i <= n_slabs; ++i) {
    knots[i] = t0 + (t1 - t0) * (static_cast<double>(i) / n_slabs);
  }
  knots.back() = t1;
  return TimeSlabs(std::move(knots));
}

FESpace::FESpace(std::shared_ptr<const LabelMesh> mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree), n_dofs_(0) {
  if (!mesh_) throw FEError("finite-element space needs a mesh");
  if (degree_ != 1 && degree_ != 2) {
    throw FEError("element degree must be 1 or 2");
  }
  n_dofs_ = mesh_->n_vertices() +
            (degree_ == 2 ? mesh_->n_faces() : 0);
}

int FESpace::cell_dof(int tri, int local) const {
  const MeshTriangle& t = mesh_->triangle(tri);
  if (local < 3) return t.v[local];
  return mesh_->n_vertices() + mesh_->face_of(tri, local - 3);
}

std::array<double, 2> FESpace::dof_coord(int dof) const {
  if (dof < mesh_->n_vertices()) return mesh_->vertex(dof);
  const MeshFace& f = mesh_->face(dof - mesh_->n_vertices());
  return {0.5 * (f.p0[0] + f.p1[0]), 0.5 * (f.p0[1] + f.p1[1])};
}

void FESpace::shape(double xi, double eta, std::vector<ShapeValues>& out) const {
  out.assign(static_cast<std::size_t>(degree_ == 1 ? 3 : 6), ShapeValues{});
  const double lam[3] = {1.0 - xi - eta, xi, eta};
  const double g[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  if (degree_ == 1) {
    for (int i = 0; i < 3; ++i) {
      out[i].N = lam[i];
      out[i].d_xi = g[i][0];
      out[i].d_eta = g[i][1];
    }
    return;
  }
  for (int i = 0; i < 3; ++i) {
    out[i].N = lam[i] * (2.0 * lam[i] - 1.0);
    const double s = 4.0 * lam[i] - 1.0;
    out[i].d_xi = g[i][0] * s;
    out[i].d_eta = g[i][1] * s;
    out[i].d_xixi = 4.0 * g[i][0] * g[i][0];
    out[i].d_xieta = 4.0 * g[i][0] * g[i][1];
    out[i].d_etaeta = 4.0 * g[i][1] * g[i][1];
  }
  for (int e = 0; e < 3; ++e) {
    const int i = e;
    const int j = (e + 1) % 3;
    ShapeValues& s = out[3 + e];
    s.N = 4.0 * lam[i] * lam[j];
    s.d_xi = 4.0 * (g[i][0] * lam[j] + g[j][0] * lam[i]);
    s.d_eta = 4.0 * (g[i][1] * lam[j] + g[j][1] * lam[i]);
    s.d_xixi = 8.0 * g[i][0] * g[j][0];
    s.d_xieta = 4.0 * (g[i][0] * g[j][1] + g[i][1] * g[j][0]);
    s.d_etaeta = 8.0 * g[i][1] * g[j][1];
  }
}

CellGeometry FESpace::cell_geometry(int tri) const {
  CellGeometry g;
  g.corners = mesh_->corner_coords(tri);
  g.J[0][0] = g.corners[1][0] - g.corners[0][0];
  g.J[1][0] = g.corners[1][1] - g.corners[0][1];
  g.J[0][1] = g.corners[2][0] - g.corners[0][0];
  g.J[1][1] = g.corners[2][1] - g.corners[0][1];
  g.detJ = g.J[0][0] * g.J[1][1] - g.J[0][1] * g.J[1][0];
  const double inv = 1.0 / g.detJ;
  g.Jinv[0][0] = g.J[1][1] * inv;
  g.Jinv[0][1] = -g.J[0][1] * inv;
  g.Jinv[1][0] = -g.J[1][0] * inv;
  g.Jinv[1][1] = g.J[0][0] * inv;
  return g;
}

FEField::FEField(std::shared_ptr<const FESpace> space,
                 std::shared_ptr<const TimeSlabs> slabs, std::string name,
                 double winding_a, double winding_b)
    : space_(std::move(space)),
      slabs_(std::move(slabs)),
      name_(std::move(name)),
      winding_a_(winding_a),
      winding_b_(winding_b) {
  if (!space_ || !slabs_) throw FEError("field needs a space and time slabs");
  coeffs_.assign(static_cast<std::size_t>(space_->n_dofs()) *
                     slabs_->n_knots(),
                 0.0);
}

double eval_field_slab(const FEField& f, int tri,
                       const std::array<double, 3>& barycentric, int slab,
                       double tau, Deriv d) {
  const FESpace& sp = f.space();
  const TimeSlabs& ts = f.slabs();
  if (slab < 0 || slab >= ts.n_slabs()) {
    throw FEError("slab index out of range");
  }
  if (std::abs(barycentric[0] + barycentric[1] + barycentric[2] - 1.0) >
      1e-10) {
    throw FEError("barycentric coordinates must sum to 1");
  }
  const double xi = barycentric[1];
  const double eta = barycentric[2];
  thread_local std::vector<ShapeValues> shp;
  sp.shape(xi, eta, shp);
  const CellGeometry geo = sp.cell_geometry(tri);
  const double dt = ts.slab_length(slab);
  const int nd = sp.dofs_per_cell();

  // Temporal combination: value weights (1-tau, tau); rate weights 1/dt.
  double cv[6] = {0, 0, 0, 0, 0, 0};
  double cr[6] = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i < nd; ++i) {
    const int dof = sp.cell_dof(tri, i);
    const double c0 = f.coeff(slab, dof);
    const double c1 = f.coeff(slab + 1, dof);
    cv[i] = (1.0 - tau) * c0 + tau * c1;
    cr[i] = (c1 - c0) / dt;
  }
  auto grad = [&](const double* c, int axis) {
    double dxi = 0.0, deta = 0.0;
    for (int i = 0; i < nd; ++i) {
      dxi += c[i] * shp[i].d_xi;
      deta += c[i] * shp[i].d_eta;
    }
    // Reference-to-label chain rule: d/da = Jinv[0][0] d/dxi + Jinv[1][0]
    // d/deta, and likewise for b with the second column.
    return geo.Jinv[0][axis] * dxi + geo.Jinv[1][axis] * deta;
  };
  auto hess = [&](const double* c, int p, int q) {
    double hxx = 0.0, hxe = 0.0, hee = 0.0;
    for (int i = 0; i < nd; ++i) {
      hxx += c[i] * shp[i].d_xixi;
      hxe += c[i] * shp[i].d_xieta;
      hee += c[i] * shp[i].d_etaeta;
    }
    const double h[2][2] = {{hxx, hxe}, {hxe, hee}};
    double s = 0.0;
    for (int r = 0; r < 2; ++r) {
      for (int u = 0; u < 2; ++u) {
        s += geo.Jinv[r][p] * h[r][u] * geo.Jinv[u][q];
      }
    }
    return s;
  };
  switch (d) {
    case Deriv::Value: {
      double v = 0.0;
      for (int i = 0; i < nd; ++i) v += cv[i] * shp[i].N;
      const double a = geo.corners[0][0] + geo.J[0][0] * xi + geo.J[0][1] * eta;
      const double b = geo.corners[0][1] + geo.J[1][0] * xi + geo.J[1][1] * eta;
      return v + f.winding_a() * a + f.winding_b() * b;
    }
    case Deriv::Da:
      return grad(cv, 0) + f.winding_a();
    case Deriv::Db:
      return grad(cv, 1) + f.winding_b();
    case Deriv::Dt: {
      double v = 0.0;
      for (int i = 0; i < nd; ++i) v += cr[i] * shp[i].N;
      return v;
    }
    case Deriv::Daa:
      return hess(cv, 0, 0);
    case Deriv::Dab:
      return hess(cv, 0, 1);
    case Deriv::Dbb:
      return hess(cv, 1, 1);
    case Deriv::Dta:
      return grad(cr, 0);
    case Deriv::Dtb:
      return grad(cr, 1);
  }
  throw FEError("unknown derivative request");
}

double eval_field(const FEField& f, int tri,
                  const std::array<double, 3>& barycentric, double t,
                  Deriv d) {
  const TimeSlabs& ts = f.slabs();
  const int slab = ts.locate(t);
  const double tau = (t - ts.knot(slab)) / ts.slab_length(slab);
  return eval_field_slab(f, tri, barycentric, slab, tau, d);
}

}  // namespace labvar
