#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "labvar/fespace.hpp"
#include "labvar/noether.hpp"
#include "labvar/quadrature.hpp"

namespace labvar {

/// Mesh of an interval: cell boundaries in strictly increasing order.  When
/// `periodic` is set the two endpoints are identified, so fields built on the
/// mesh wrap around.
struct Mesh1D {
  std::vector<double> nodes;
  bool periodic = false;

  int n_cells() const { return static_cast<int>(nodes.size()) - 1; }
  double length() const { return nodes.back() - nodes.front(); }
};

Mesh1D uniform_mesh_1d(double x0, double x1, int n_cells, bool periodic = false);

/// Jitters the interior nodes by independent uniform offsets in
/// [-amplitude, amplitude]; endpoints stay fixed.  Deterministic for a fixed
/// seed; throws FEError if the jitter destroys monotonicity.
Mesh1D perturb_mesh_1d(const Mesh1D& m, double amplitude, std::uint64_t seed);

/// Continuous piecewise-polynomial space of degree 1 or 2 on a Mesh1D.  On a
/// periodic mesh the endpoint nodes share one unknown.  Local shape functions
/// on the reference cell [0, 1]: 0 = left node, 1 = right node, 2 = midpoint
/// (degree 2 only).
class FESpace1D {
 public:
  FESpace1D(Mesh1D mesh, int degree);

  const Mesh1D& mesh() const { return mesh_; }
  int degree() const { return degree_; }
  int n_local() const { return degree_ + 1; }
  int n_dofs() const { return n_dofs_; }
  int cell_dof(int cell, int local) const;
  /// Coordinate of the interpolation point the unknown multiplies.
  double dof_coord(int dof) const;

  /// Shape values and reference derivatives at s in [0, 1].
  void shape(double s, double* N, double* dN, double* d2N) const;

 private:
  Mesh1D mesh_;
  int degree_;
  int n_dofs_;
  int n_vertex_dofs_;
};

/// Coefficients over an FESpace1D (time-independent spatial field).
struct Field1D {
  std::shared_ptr<const FESpace1D> space;
  std::vector<double> coeffs;
};

Field1D interpolate_1d(std::shared_ptr<const FESpace1D> space,
                       const std::function<double(double)>& f);

/// Value (order 0) or physical derivative (order 1 or 2) at reference
/// coordinate s of the given cell.
double eval_field_1d(const Field1D& U, int cell, double s, int order = 0);

struct Options1D {
  /// Values for the jet-space parameters appearing in the density.
  std::map<std::string, double> parameters;
  /// Polynomial degree the quadrature rule must integrate exactly.
  int quadrature_degree = 19;
};

/// Quadrature value of the discrete conservation-law pairing for a density
/// L(x, u, u_x) and a point generator g over an arbitrary field U:
///
///   sum_cells Quad[ E(L)|_U * Q ]  +  sum_cells [ A ]_{cell start}^{cell end}
///
/// with Q the characteristic of g and A = L xi + dL/du_x * Q.  Summing the
/// per-cell endpoint differences yields the interior jump terms plus the
/// single-sided boundary terms (which pair across the seam on a periodic
/// mesh).  For a g-invariant density the result is zero to roundoff for any
/// U and any mesh; in general it equals the quadrature of the infinitesimal
/// invariance residual.
double fe_noether_residual_1d(const Expr& L, const Field1D& U,
                              const SymmetryGenerator& g,
                              const Options1D& opts = {});

/// Residual vector of the discrete variational equations d/dc_j Quad[L] for
/// a static density L(x, u, u_x), by either assembly route.
std::vector<double> assemble_residual_1d(const Expr& L, const Field1D& U,
                                         const JetSpace& space,
                                         AssemblyRoute route,
                                         const Options1D& opts = {});

}  // namespace labvar
