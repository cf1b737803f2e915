#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "labvar/mesh.hpp"

namespace labvar {

struct FEError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The two algebraically equal assembly routes for variational residuals: the
// direct derivative of the quadrature action, and the cell-wise
// integrated-by-parts form (Euler-Lagrange values plus cell-boundary fluxes).
enum class AssemblyRoute { Weak, Strong };

// Strictly increasing time knots t_0 < t_1 < ... < t_N; slab n is
// [t_n, t_{n+1}].
class TimeSlabs {
 public:
  explicit TimeSlabs(std::vector<double> knots);

  int n_knots() const { return static_cast<int>(knots_.size()); }
  int n_slabs() const { return n_knots() - 1; }
  double knot(int n) const { return knots_[n]; }
  double t_begin() const { return knots_.front(); }
  double t_end() const { return knots_.back(); }
  double slab_length(int n) const { return knots_[n + 1] - knots_[n]; }
  const std::vector<double>& knots() const { return knots_; }

  // Slab index n with t in [t_n, t_{n+1}); t = t_N maps to the last slab.
  // Throws FEError for t outside [t_0, t_N].
  int locate(double t) const;

 private:
  std::vector<double> knots_;
};

TimeSlabs uniform_slabs(double t0, double t1, int n_slabs);

// Reference-element shape function values and derivatives at one point, in
// reference coordinates (xi, eta) with barycentric (1-xi-eta, xi, eta).
struct ShapeValues {
  double N = 0.0;
  double d_xi = 0.0;
  double d_eta = 0.0;
  double d_xixi = 0.0;
  double d_xieta = 0.0;
  double d_etaeta = 0.0;
};

// Affine geometry of one triangle: p(xi,eta) = c0 + J * (xi,eta)^T.
struct CellGeometry {
  std::array<std::array<double, 2>, 3> corners{};
  double J[2][2] = {{0, 0}, {0, 0}};
  double Jinv[2][2] = {{0, 0}, {0, 0}};
  double detJ = 0.0;  // = 2 * area
};

// Continuous Lagrange space of degree 1 or 2 on a LabelMesh.  Degrees of
// freedom honor the periodic identification: degree 1 dofs are mesh vertices;
// degree 2 adds one dof per face (edge midpoint).  Local dof ordering on a
// triangle: 0,1,2 the corners, then (degree 2) 3+e the midpoint of local edge
// e, which joins corners e and (e+1) mod 3.
class FESpace {
 public:
  FESpace(std::shared_ptr<const LabelMesh> mesh, int degree);

  const LabelMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const LabelMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int n_dofs() const { return n_dofs_; }
  int dofs_per_cell() const { return degree_ == 1 ? 3 : 6; }
  int cell_dof(int tri, int local) const;
  // Representative coordinate of a dof (a periodic dof has one representative,
  // chosen from one incident triangle's frame).
  std::array<double, 2> dof_coord(int dof) const;

  // Shape functions at a reference point; fills `out` with dofs_per_cell()
  // entries.
  void shape(double xi, double eta, std::vector<ShapeValues>& out) const;

  CellGeometry cell_geometry(int tri) const;

 private:
  std::shared_ptr<const LabelMesh> mesh_;
  int degree_;
  int n_dofs_;
};

enum class Deriv { Value, Da, Db, Dt, Daa, Dab, Dbb, Dta, Dtb };

// Scalar space-time finite-element field: continuous piecewise polynomial of
// degree k in labels, continuous piecewise linear in time over the slabs.
// Coefficients are stored per time knot (knot-major).  A label coordinate
// field on the periodic mesh stores only its periodic displacement part; the
// winding (1,0) for X or (0,1) for Y adds the non-periodic linear part
// winding_a*a + winding_b*b at evaluation time, so X(a+La,b) = X(a,b) + La
// holds across the seam.
class FEField {
 public:
  FEField(std::shared_ptr<const FESpace> space,
          std::shared_ptr<const TimeSlabs> slabs, std::string name,
          double winding_a = 0.0, double winding_b = 0.0);

  const FESpace& space() const { return *space_; }
  const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
  const TimeSlabs& slabs() const { return *slabs_; }
  const std::shared_ptr<const TimeSlabs>& slabs_ptr() const { return slabs_; }
  const std::string& name() const { return name_; }
  double winding_a() const { return winding_a_; }
  double winding_b() const { return winding_b_; }

  double coeff(int knot, int dof) const {
    return coeffs_[static_cast<std::size_t>(knot) * space_->n_dofs() + dof];
  }
  double& coeff(int knot, int dof) {
    return coeffs_[static_cast<std::size_t>(knot) * space_->n_dofs() + dof];
  }
  const std::vector<double>& coeffs() const { return coeffs_; }
  std::vector<double>& coeffs() { return coeffs_; }

  // Sets the coefficients at one time knot by nodal interpolation of f(a,b),
  // which must supply the periodic displacement part for winding fields.
  template <class F>
  void interpolate_knot(int knot, F&& f) {
    for (int d = 0; d < space_->n_dofs(); ++d) {
      auto p = space_->dof_coord(d);
      coeff(knot, d) = f(p[0], p[1]);
    }
  }

 private:
  std::shared_ptr<const FESpace> space_;
  std::shared_ptr<const TimeSlabs> slabs_;
  std::string name_;
  double winding_a_;
  double winding_b_;
  std::vector<double> coeffs_;
};

// Evaluates a field (or one of its derivatives) at a barycentric point of a
// triangle and time t.  Second label derivatives require degree 2 only in the
// sense of being nonzero; they are valid (identically zero) for degree 1.
// At an interior knot the one-sided time derivative from the later slab is
// returned.  Throws FEError if t lies outside the slab range.
double eval_field(const FEField& f, int tri,
                  const std::array<double, 3>& barycentric, double t, Deriv d);

// Same, addressed by (slab, tau) with tau in [0,1] the local slab coordinate;
// used for one-sided evaluation exactly at slab interfaces.
double eval_field_slab(const FEField& f, int tri,
                       const std::array<double, 3>& barycentric, int slab,
                       double tau, Deriv d);

}  // namespace labvar
