#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "labvar/fespace.hpp"
#include "labvar/quadrature.hpp"
#include "labvar/streams.hpp"
#include "labvar/swmodels.hpp"

namespace labvar {

/// Thrown on degenerate states during assembly (deformation determinant
/// non-positive at a quadrature point, with location) and on failed Newton
/// iteration (with residual history).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double tolerance = 1e-12;  ///< residual infinity norm
  int max_iterations = 30;
  double backtrack = 0.5;  ///< step shrink factor when a full step fails
  int max_backtracks = 25;
};

/// The one rule set shared by every integral of every identity, so that the
/// identities close at roundoff rather than up to quadrature error.
struct QuadratureSet {
  TriangleRule cell;
  IntervalRule edge;
  IntervalRule time;
};

/// Cell and edge rules exact to degree 2k+4 for element degree k, and the
/// one-point midpoint time rule per slab.  The midpoint rule is load-bearing
/// for the march: on it the solved equations put the slab-midpoint Euler
/// values in the test span, which is what keeps the conserved quantities of
/// a solved run pinned to the solver tolerance instead of the slab size.
QuadratureSet default_rules(int element_degree);

namespace detail {
struct ModelPrograms;
}

/// A variational model discretized on one label mesh: continuous Lagrange
/// elements of one degree in the labels, continuous piecewise-linear time
/// over the slabs, one space-time field per dependent variable of the model.
/// The label-coordinate fields x and y carry the windings that make them
/// single-valued displacements on periodic meshes.
///
/// Construction compiles the density, its variational derivatives and every
/// applicable conservation identity once; the compiled programs are shared
/// by assembly, the Newton solver and the identity evaluators, so all of
/// them see the identical quadrature realization.
class DiscreteProblem {
 public:
  DiscreteProblem(ModelSpec model, SWParams params,
                  std::shared_ptr<const FESpace> space,
                  std::shared_ptr<const TimeSlabs> slabs,
                  std::optional<QuadratureSet> rules = std::nullopt);

  const ModelSpec& model() const { return model_; }
  const SWParams& params() const { return params_; }
  const FESpace& space() const { return *space_; }
  const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
  const TimeSlabs& slabs() const { return *slabs_; }
  const QuadratureSet& rules() const { return rules_; }

  int n_fields() const { return static_cast<int>(fields_.size()); }
  const std::vector<std::string>& field_names() const { return names_; }
  int field_index(const std::string& dep) const;
  FEField& field(int i) { return fields_[static_cast<std::size_t>(i)]; }
  const FEField& field(int i) const {
    return fields_[static_cast<std::size_t>(i)];
  }
  FEField& field(const std::string& dep) { return field(field_index(dep)); }
  const FEField& field(const std::string& dep) const {
    return field(field_index(dep));
  }

  /// Unknowns per time knot: n_fields() * space().n_dofs().
  int n_unknowns() const;

  /// Zeroes every coefficient at every knot: positions at their labels,
  /// velocities zero — the exact rest state.
  void set_rest_state();

  const detail::ModelPrograms& programs() const { return *programs_; }

 private:
  ModelSpec model_;
  SWParams params_;
  std::shared_ptr<const FESpace> space_;
  std::shared_ptr<const TimeSlabs> slabs_;
  QuadratureSet rules_;
  std::vector<std::string> names_;
  std::vector<FEField> fields_;
  std::shared_ptr<const detail::ModelPrograms> programs_;
};

/// Residual of the discrete variational equations advancing slab n: one
/// entry per spatial basis function N_j, laid out field-major (entry
/// f * n_dofs + j).  Entry j is the action derivative paired with N_j times
/// the time hat of the slab's start knot — the falling half over this slab,
/// evaluated with `end_coeffs` (same layout) in place of the stored end-knot
/// coefficients, plus the rising half over the previous slab on the stored
/// fields.  For slab 0 the previous-slab half is replaced by the momentum
/// density of the initial state, so the first slab starts from the momentum
/// of the initial data.  Both assembly routes produce the same vector up to
/// roundoff on matching inputs.
std::vector<double> assemble_el_residual(const DiscreteProblem& p,
                                         const std::vector<double>& end_coeffs,
                                         int slab,
                                         AssemblyRoute route = AssemblyRoute::Weak);

struct SlabReport {
  int iterations = 0;
  std::vector<double> residual_norms;  ///< per iterate, starting with the guess
};

/// Newton-solves slab n starting from the stored knot-n state and writes the
/// converged coefficients into knot n+1.
SlabReport solve_slab(DiscreteProblem& p, const SolverConfig& config, int slab);

/// Solves every slab in order.
std::vector<SlabReport> march(DiscreteProblem& p, const SolverConfig& config);

/// One evaluated conservation identity over a slab.  For an invariant
/// density the three terms cancel: sum vanishes to roundoff relative to
/// `scale`, the largest term magnitude.
struct IdentityTerms {
  std::string quantity;
  double volume = 0.0;    ///< space-time integral of sum_alpha Q^alpha E^alpha
  double boundary = 0.0;  ///< integral of A_t at slab end minus slab start
  double jump = 0.0;      ///< label-flux total over all cell edges
  double sum = 0.0;       ///< volume + boundary + jump exactly as assembled
  double scale = 0.0;     ///< max(|volume|, |boundary|, |jump|)
};

/// Per-slab report over the tracked symmetries and a family of stream
/// functions.
struct NoetherResidualReport {
  int slab = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<IdentityTerms> entries;
};

/// Conservation identity of the relabelling driven by stream phi, evaluated
/// over slab n on the stored fields (which need not solve anything).  With
/// `flip_face_orientation` the per-face side contributions accumulate in the
/// opposite order; the result must not depend on it.
IdentityTerms fe_pv_residual(const DiscreteProblem& p, int slab,
                             const StreamFunction& phi,
                             bool flip_face_orientation = false);

/// The point symmetries tracked alongside the relabelling family.  The two
/// linear momenta pair the coordinate translations with the gauge term that
/// makes their densities gauge-independent; the label translations are the
/// raw label-shift identities; angular momentum exists when the density is
/// rotation-invariant (symmetric gauge).
enum class TrackedSymmetry {
  Energy,
  MomentumX,
  MomentumY,
  MomentumA,
  MomentumB,
  AngularMomentum
};

/// Identities applicable to this problem's density, in reporting order.
std::vector<TrackedSymmetry> tracked_symmetries(const DiscreteProblem& p);

/// Conservation identity of one tracked point symmetry over slab n; throws
/// FEError if the symmetry is not applicable to the density.
IdentityTerms fe_symmetry_residual(const DiscreteProblem& p, int slab,
                                   TrackedSymmetry s);

/// All tracked point identities plus one entry per stream.
NoetherResidualReport noether_report(
    const DiscreteProblem& p, int slab,
    const std::vector<const StreamFunction*>& streams);

/// Instantaneous residual of the weak vorticity law at time knot `knot`:
/// the coordinate-map residuals paired with the stream characteristics, the
/// exact time derivative of the piecewise-polynomial density integral, and
/// the label-flux term, evaluated one-sided from the adjacent slab.  Exactly
/// zero at rest; tends to zero under space-time refinement on fields that
/// follow a smooth flow, which is what `labvar converge` measures.
double weak_pv_limit_residual(const DiscreteProblem& p, int knot,
                              const StreamFunction& phi);

struct ConservedSeries {
  std::string quantity;
  std::vector<double> values;  ///< one per time knot
};

/// Integral of the conserved density A_t over the domain at every knot
/// (one-sided from the earlier slab at interior knots).
ConservedSeries conserved_quantity_series(const DiscreteProblem& p,
                                          TrackedSymmetry s);
ConservedSeries conserved_quantity_series(const DiscreteProblem& p,
                                          const StreamFunction& phi);

/// Largest |values[k] - values[0]| of a series.
double series_drift(const ConservedSeries& s);

}  // namespace labvar
