#include "labvar/fem1d.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "labvar/calculus.hpp"
#include "labvar/canonical.hpp"
#include "labvar/compiled.hpp"

namespace labvar {

namespace {

void check_nodes(const std::vector<double>& nodes, bool periodic) {
  if (nodes.size() < 2) throw FEError("a 1-D mesh needs at least two nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) {
      throw FEError("1-D mesh nodes must be strictly increasing (node " +
                    std::to_string(i) + ")");
    }
  }
  if (periodic && nodes.size() < 3) {
    throw FEError("a periodic 1-D mesh needs at least two cells");
  }
}

}  // namespace

Mesh1D uniform_mesh_1d(double x0, double x1, int n_cells, bool periodic) {
  if (n_cells < 1) throw FEError("a 1-D mesh needs at least one cell");
  if (!(x1 > x0)) throw FEError("1-D mesh interval must have positive length");
  Mesh1D m;
  m.periodic = periodic;
  m.nodes.resize(static_cast<std::size_t>(n_cells) + 1);
  for (int i = 0; i <= n_cells; ++i) {
    m.nodes[static_cast<std::size_t>(i)] =
        x0 + (x1 - x0) * static_cast<double>(i) / n_cells;
  }
  m.nodes.back() = x1;
  check_nodes(m.nodes, periodic);
  return m;
}

Mesh1D perturb_mesh_1d(const Mesh1D& m, double amplitude, std::uint64_t seed) {
  if (amplitude < 0) throw FEError("perturbation amplitude must be >= 0");
  check_nodes(m.nodes, m.periodic);
  Mesh1D out = m;
  if (amplitude == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-amplitude, amplitude);
  for (std::size_t i = 1; i + 1 < out.nodes.size(); ++i) {
    out.nodes[i] += jitter(rng);
  }
  for (std::size_t i = 1; i < out.nodes.size(); ++i) {
    if (!(out.nodes[i] > out.nodes[i - 1])) {
      throw FEError("perturbation amplitude " + std::to_string(amplitude) +
                    " destroys node ordering; use a smaller amplitude");
    }
  }
  return out;
}

FESpace1D::FESpace1D(Mesh1D mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree) {
  if (degree_ != 1 && degree_ != 2) {
    throw FEError("1-D element degree must be 1 or 2, got " +
                  std::to_string(degree_));
  }
  check_nodes(mesh_.nodes, mesh_.periodic);
  const int cells = mesh_.n_cells();
  n_vertex_dofs_ = mesh_.periodic ? cells : cells + 1;
  n_dofs_ = n_vertex_dofs_ + (degree_ == 2 ? cells : 0);
}

int FESpace1D::cell_dof(int cell, int local) const {
  const int cells = mesh_.n_cells();
  if (cell < 0 || cell >= cells) throw FEError("cell index out of range");
  switch (local) {
    case 0:
      return cell;
    case 1:
      return mesh_.periodic ? (cell + 1) % cells : cell + 1;
    case 2:
      if (degree_ == 2) return n_vertex_dofs_ + cell;
      break;
    default:
      break;
  }
  throw FEError("local dof index out of range");
}

double FESpace1D::dof_coord(int dof) const {
  if (dof < 0 || dof >= n_dofs_) throw FEError("dof index out of range");
  if (dof < n_vertex_dofs_) return mesh_.nodes[static_cast<std::size_t>(dof)];
  const int cell = dof - n_vertex_dofs_;
  return 0.5 * (mesh_.nodes[static_cast<std::size_t>(cell)] +
                mesh_.nodes[static_cast<std::size_t>(cell) + 1]);
}

void FESpace1D::shape(double s, double* N, double* dN, double* d2N) const {
  if (degree_ == 1) {
    N[0] = 1 - s;
    N[1] = s;
    dN[0] = -1;
    dN[1] = 1;
    d2N[0] = d2N[1] = 0;
    return;
  }
  N[0] = (1 - s) * (1 - 2 * s);
  N[1] = s * (2 * s - 1);
  N[2] = 4 * s * (1 - s);
  dN[0] = 4 * s - 3;
  dN[1] = 4 * s - 1;
  dN[2] = 4 - 8 * s;
  d2N[0] = 4;
  d2N[1] = 4;
  d2N[2] = -8;
}

Field1D interpolate_1d(std::shared_ptr<const FESpace1D> space,
                       const std::function<double(double)>& f) {
  Field1D out;
  out.space = std::move(space);
  out.coeffs.resize(static_cast<std::size_t>(out.space->n_dofs()));
  for (int d = 0; d < out.space->n_dofs(); ++d) {
    out.coeffs[static_cast<std::size_t>(d)] = f(out.space->dof_coord(d));
  }
  return out;
}

double eval_field_1d(const Field1D& U, int cell, double s, int order) {
  const FESpace1D& sp = *U.space;
  double N[3], dN[3], d2N[3];
  sp.shape(s, N, dN, d2N);
  const double h = sp.mesh().nodes[static_cast<std::size_t>(cell) + 1] -
                   sp.mesh().nodes[static_cast<std::size_t>(cell)];
  double acc = 0;
  for (int j = 0; j < sp.n_local(); ++j) {
    const double c = U.coeffs[static_cast<std::size_t>(sp.cell_dof(cell, j))];
    switch (order) {
      case 0:
        acc += c * N[j];
        break;
      case 1:
        acc += c * dN[j] / h;
        break;
      case 2:
        acc += c * d2N[j] / (h * h);
        break;
      default:
        throw FEError("derivative order must be 0, 1 or 2");
    }
  }
  return acc;
}

namespace {

// Slot frame for compiling jet expressions over a 1-D field: slots
// {position, value, first derivative, second derivative, parameters...}.
class Context1D {
 public:
  Context1D(const JetSpace& space, const Options1D& opts) {
    if (space.independents().size() != 1 || space.dependents().size() != 1) {
      throw FEError(
          "1-D assembly needs a space with exactly one independent and one "
          "dependent variable");
    }
    indep_ = space.independents()[0];
    dep_ = space.dependents()[0];
    params_ = space.parameters();
    frame_.assign(4 + params_.size(),
                  std::numeric_limits<double>::quiet_NaN());
    bound_.assign(params_.size(), 0);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto it = opts.parameters.find(params_[i]);
      if (it != opts.parameters.end()) {
        frame_[4 + i] = it->second;
        bound_[i] = 1;
      }
    }
  }

  CompiledExpr compile(const Expr& e) const {
    return CompiledExpr::compile(
        canonical(e), [this](const ExprNode& n) { return resolve(n); });
  }

  void set_point(double x, double u, double ux, double uxx) {
    frame_[0] = x;
    frame_[1] = u;
    frame_[2] = ux;
    frame_[3] = uxx;
  }

  const double* frame() const { return frame_.data(); }

 private:
  int resolve(const ExprNode& n) const {
    if (n.kind == ExprKind::Symbol) {
      if (n.role == SymbolRole::Independent && n.name == indep_) return 0;
      if (n.role == SymbolRole::JetCoordinate && n.base == dep_) {
        const std::size_t order = n.index.size();
        if (order <= 2) return 1 + static_cast<int>(order);
        throw CompileError("the element frame cannot supply '" + n.name +
                           "': derivative order beyond 2; the density must "
                           "be of first order");
      }
      if (n.role == SymbolRole::Parameter) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
          if (params_[i] == n.name) {
            if (!bound_[i]) {
              throw FEError("no value bound for parameter '" + n.name + "'");
            }
            return 4 + static_cast<int>(i);
          }
        }
      }
    }
    throw CompileError("cannot evaluate '" + n.display() +
                       "' in the 1-D assembly frame");
  }

  std::string indep_, dep_;
  std::vector<std::string> params_;
  std::vector<double> frame_;
  std::vector<char> bound_;
};

void fill_point(Context1D& ctx, const Field1D& U, int cell, double s,
                double x) {
  ctx.set_point(x, eval_field_1d(U, cell, s, 0), eval_field_1d(U, cell, s, 1),
                eval_field_1d(U, cell, s, 2));
}

}  // namespace

double fe_noether_residual_1d(const Expr& L, const Field1D& U,
                              const SymmetryGenerator& g,
                              const Options1D& opts) {
  const JetSpace& space = g.space();
  Context1D ctx(space, opts);
  const std::string& indep = space.independents()[0];
  const std::string& dep = space.dependents()[0];

  // Construction cross-checks the defining identity of the current.
  const ConservedCurrent current = noether_current_1d(L, g);
  const Expr volume_density =
      euler_operator(space, L, dep) * current.characteristics.at(dep);
  const CompiledExpr vol = ctx.compile(volume_density);
  const CompiledExpr flux = ctx.compile(current.components.at(indep));

  const IntervalRule rule = interval_rule(opts.quadrature_degree);
  const Mesh1D& mesh = U.space->mesh();
  double acc = 0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const double x0 = mesh.nodes[static_cast<std::size_t>(cell)];
    const double h = mesh.nodes[static_cast<std::size_t>(cell) + 1] - x0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      fill_point(ctx, U, cell, rule.points[q], x0 + h * rule.points[q]);
      acc += h * rule.weights[q] * vol.eval(ctx.frame());
    }
    // Per-cell one-sided flux difference; summed over cells this yields the
    // interior jumps plus the single-sided boundary terms.
    fill_point(ctx, U, cell, 1.0, x0 + h);
    acc += flux.eval(ctx.frame());
    fill_point(ctx, U, cell, 0.0, x0);
    acc -= flux.eval(ctx.frame());
  }
  return acc;
}

std::vector<double> assemble_residual_1d(const Expr& L, const Field1D& U,
                                         const JetSpace& space,
                                         AssemblyRoute route,
                                         const Options1D& opts) {
  Context1D ctx(space, opts);
  const std::string& dep = space.dependents()[0];
  const Expr u = space.coordinate(dep, std::vector<std::string>{});
  const Expr ux = space.coordinate(
      dep, std::vector<std::string>{space.independents()[0]});

  const CompiledExpr L_u = ctx.compile(partial(L, u));
  const CompiledExpr L_ux = ctx.compile(partial(L, ux));
  const CompiledExpr el = ctx.compile(euler_operator(space, L, dep));

  const IntervalRule rule = interval_rule(opts.quadrature_degree);
  const FESpace1D& sp = *U.space;
  const Mesh1D& mesh = sp.mesh();
  std::vector<double> r(static_cast<std::size_t>(sp.n_dofs()), 0.0);
  double N[3], dN[3], d2N[3];

  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const double x0 = mesh.nodes[static_cast<std::size_t>(cell)];
    const double h = mesh.nodes[static_cast<std::size_t>(cell) + 1] - x0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      fill_point(ctx, U, cell, s, x0 + h * s);
      sp.shape(s, N, dN, d2N);
      const double w = h * rule.weights[q];
      if (route == AssemblyRoute::Weak) {
        const double lu = L_u.eval(ctx.frame());
        const double lux = L_ux.eval(ctx.frame());
        for (int j = 0; j < sp.n_local(); ++j) {
          r[static_cast<std::size_t>(sp.cell_dof(cell, j))] +=
              w * (lu * N[j] + lux * dN[j] / h);
        }
      } else {
        const double e = el.eval(ctx.frame());
        for (int j = 0; j < sp.n_local(); ++j) {
          r[static_cast<std::size_t>(sp.cell_dof(cell, j))] += w * e * N[j];
        }
      }
    }
    if (route == AssemblyRoute::Strong) {
      // Cell-boundary fluxes from the element-wise integration by parts.
      for (const double s : {0.0, 1.0}) {
        fill_point(ctx, U, cell, s, x0 + h * s);
        sp.shape(s, N, dN, d2N);
        const double sign = (s == 1.0) ? 1.0 : -1.0;
        const double lux = L_ux.eval(ctx.frame());
        for (int j = 0; j < sp.n_local(); ++j) {
          r[static_cast<std::size_t>(sp.cell_dof(cell, j))] +=
              sign * lux * N[j];
        }
      }
    }
  }
  return r;
}

}  // namespace labvar
