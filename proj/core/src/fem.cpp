#include "labvar/fem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "labvar/calculus.hpp"
#include "labvar/canonical.hpp"
#include "labvar/compiled.hpp"
#include "labvar/noether.hpp"

namespace labvar {

namespace detail {

// One conservation identity, compiled against the shared slot frame: the
// volume pairing sum_alpha Q^alpha E^alpha, the conserved density A_t, the
// two label fluxes, and (for the stream-driven identity) the exact time
// derivative of A_t used by the instantaneous weak law.
struct CompiledIdentity {
  std::string quantity;
  bool uses_stream = false;
  CompiledExpr vol, At, Aa, Ab;
  CompiledExpr dAt_dt;
  // Volume pairing restricted to the coordinate-map fields x, y.  The
  // instantaneous weak vorticity law is stated against the map alone; for
  // densities with auxiliary velocity fields the restricted pairing differs
  // from `vol` by the kinematic pairings, which is exactly the defect the
  // refinement study measures.
  CompiledExpr vol_map;
  bool has_ddt = false;
};

// Everything compiled once per model: the density, its first and second
// partials with respect to the per-field jet slots, the variational
// derivatives, and the applicable identities.  Frame layout: slots 0..2 the
// labels a, b and time t; then the parameters; then nine jet slots per field
// in Deriv order; then a pinned zero (the within-slab second time derivative
// of a piecewise-linear-in-time field); then the stream's value, d/da, d/db.
struct ModelPrograms {
  std::vector<std::string> param_names;
  std::vector<std::string> field_names;
  std::vector<std::array<double, 2>> windings;
  int n_params = 0;
  int n_fields = 0;
  int zero_slot = 0;
  int stream_value = 0, stream_da = 0, stream_db = 0;
  int frame_size = 0;
  int fx = -1, fy = -1;  // field indices of the coordinates x, y (or -1)

  CompiledExpr lagrangian;
  std::vector<std::array<CompiledExpr, 4>> first;  // d/d{value, _a, _b, _t}
  struct JacTerm {
    int f1, d1, f2, d2;
    CompiledExpr prog;
  };
  std::vector<JacTerm> second;
  std::vector<CompiledExpr> euler;

  std::vector<CompiledIdentity> point_identities;
  CompiledIdentity relabel;

  int slot(int field, int deriv) const {
    return 3 + n_params + 9 * field + deriv;
  }
};

}  // namespace detail

namespace {

using detail::CompiledIdentity;
using detail::ModelPrograms;

// Maps a jet multi-index over (a, b, t) to its Deriv slot offset; -1 means
// the pinned zero slot (second time derivative), -2 means unrepresentable.
int deriv_slot_offset(const std::vector<std::string>& index) {
  int na = 0, nb = 0, nt = 0;
  for (const std::string& s : index) {
    if (s == "a") {
      ++na;
    } else if (s == "b") {
      ++nb;
    } else if (s == "t") {
      ++nt;
    } else {
      return -2;
    }
  }
  if (na + nb + nt > 2) return -2;
  if (nt == 2) return -1;
  if (nt == 1) {
    if (na == 0 && nb == 0) return 3;
    return na == 1 ? 7 : 8;
  }
  switch (na * 10 + nb) {
    case 0:
      return 0;
    case 10:
      return 1;
    case 1:
      return 2;
    case 20:
      return 4;
    case 11:
      return 5;
    case 2:
      return 6;
  }
  return -2;
}

int field_index_of(const ModelPrograms& mp, const std::string& base) {
  for (int f = 0; f < mp.n_fields; ++f) {
    if (mp.field_names[static_cast<std::size_t>(f)] == base) return f;
  }
  return -1;
}

// Leaf-to-slot resolution for compilation against the shared frame.
struct SlotResolver {
  const ModelPrograms* mp;

  int operator()(const ExprNode& n) const {
    if (n.kind == ExprKind::Symbol) {
      if (n.role == SymbolRole::Independent) {
        if (n.name == "a") return 0;
        if (n.name == "b") return 1;
        if (n.name == "t") return 2;
      } else if (n.role == SymbolRole::Parameter) {
        for (int i = 0; i < mp->n_params; ++i) {
          if (mp->param_names[static_cast<std::size_t>(i)] == n.name) {
            return 3 + i;
          }
        }
      } else if (n.role == SymbolRole::JetCoordinate) {
        const int f = field_index_of(*mp, n.base);
        if (f >= 0) {
          const int off = deriv_slot_offset(n.index);
          if (off == -1) return mp->zero_slot;
          if (off >= 0) return mp->slot(f, off);
          throw CompileError(
              "the element frame cannot supply '" + n.name +
              "': fields are piecewise polynomial in the labels and "
              "piecewise linear in time");
        }
      }
    } else if (n.kind == ExprKind::FuncSym && n.name == "phi") {
      const int da = n.dcount.empty() ? 0 : n.dcount[0];
      const int db = n.dcount.size() < 2 ? 0 : n.dcount[1];
      if (da == 0 && db == 0) return mp->stream_value;
      if (da == 1 && db == 0) return mp->stream_da;
      if (da == 0 && db == 1) return mp->stream_db;
      throw CompileError("stream functions carry first derivatives only; "
                         "cannot evaluate '" +
                         n.display() + "'");
    }
    throw CompileError("cannot evaluate '" + n.display() +
                       "' in the assembly frame");
  }
};

const char* symmetry_name(TrackedSymmetry s) {
  switch (s) {
    case TrackedSymmetry::Energy:
      return "energy";
    case TrackedSymmetry::MomentumX:
      return "momentum_x";
    case TrackedSymmetry::MomentumY:
      return "momentum_y";
    case TrackedSymmetry::MomentumA:
      return "momentum_a";
    case TrackedSymmetry::MomentumB:
      return "momentum_b";
    case TrackedSymmetry::AngularMomentum:
      return "angular";
  }
  return "?";
}

// Builds the relabelling generator, declaring the stream function on first
// use and reusing the declaration afterwards.
SymmetryGenerator make_relabelling(JetSpace& space) {
  if (!space.function_args("phi")) {
    return relabelling_generator(space, "phi");
  }
  const Expr chi = func_symbol("phi", {"a", "b"}, {0, 0});
  std::map<std::string, Expr> xi{
      {"a", partial(chi, space.independent("b"))},
      {"b", -partial(chi, space.independent("a"))}};
  return SymmetryGenerator(space, "relabel(phi)", std::move(xi), {});
}

std::shared_ptr<const ModelPrograms> build_programs(const ModelSpec& model) {
  if (!model.space) throw FEError("the model has no jet space");
  JetSpace& space = *model.space;
  if (space.independents().size() != 3 || !space.has_independent("a") ||
      !space.has_independent("b") || !space.has_independent("t")) {
    throw FEError("the discrete layer works over labels a, b and time t");
  }

  auto mp = std::make_shared<ModelPrograms>();
  mp->param_names = space.parameters();
  mp->n_params = static_cast<int>(mp->param_names.size());
  mp->field_names = space.dependents();
  mp->n_fields = static_cast<int>(mp->field_names.size());
  if (mp->n_fields == 0) throw FEError("the model has no dependent variables");
  for (const std::string& name : mp->field_names) {
    if (name == "x") {
      mp->windings.push_back({1.0, 0.0});
    } else if (name == "y") {
      mp->windings.push_back({0.0, 1.0});
    } else {
      mp->windings.push_back({0.0, 0.0});
    }
  }
  mp->fx = field_index_of(*mp, "x");
  mp->fy = field_index_of(*mp, "y");
  mp->zero_slot = 3 + mp->n_params + 9 * mp->n_fields;
  mp->stream_value = mp->zero_slot + 1;
  mp->stream_da = mp->zero_slot + 2;
  mp->stream_db = mp->zero_slot + 3;
  mp->frame_size = mp->zero_slot + 4;

  SlotResolver resolve{mp.get()};
  auto compile = [&](const Expr& e) {
    return CompiledExpr::compile(canonical(e), resolve);
  };

  // The trial spaces are first order in every variable, so the density must
  // be too; its variational consequences may reach second derivatives.
  const Expr L = model.lagrangian;
  for (const Expr& s : free_symbols(canonical(L))) {
    if (s->role == SymbolRole::JetCoordinate && s->index.size() >= 2) {
      throw CompileError("the density depends on '" + s->name +
                         "'; only first-order densities are supported");
    }
  }
  mp->lagrangian = compile(L);

  std::vector<std::array<Expr, 4>> coords;
  std::vector<std::array<Expr, 4>> first_sym;
  for (int f = 0; f < mp->n_fields; ++f) {
    const std::string& name = mp->field_names[static_cast<std::size_t>(f)];
    coords.push_back({space.coordinate(name, std::vector<std::string>{}),
                      space.coordinate(name, std::vector<std::string>{"a"}),
                      space.coordinate(name, std::vector<std::string>{"b"}),
                      space.coordinate(name, std::vector<std::string>{"t"})});
    std::array<Expr, 4> fs{};
    std::array<CompiledExpr, 4> fc{};
    for (int d = 0; d < 4; ++d) {
      fs[static_cast<std::size_t>(d)] =
          partial(L, coords.back()[static_cast<std::size_t>(d)]);
      fc[static_cast<std::size_t>(d)] =
          compile(fs[static_cast<std::size_t>(d)]);
    }
    first_sym.push_back(fs);
    mp->first.push_back(fc);
  }
  for (int f1 = 0; f1 < mp->n_fields; ++f1) {
    for (int d1 = 0; d1 < 4; ++d1) {
      const Expr& base = first_sym[static_cast<std::size_t>(f1)]
                                  [static_cast<std::size_t>(d1)];
      if (is_zero(base)) continue;
      for (int f2 = 0; f2 < mp->n_fields; ++f2) {
        for (int d2 = 0; d2 < 4; ++d2) {
          const Expr pp = canonical(
              partial(base, coords[static_cast<std::size_t>(f2)]
                                  [static_cast<std::size_t>(d2)]));
          if (is_zero(pp)) continue;
          mp->second.push_back(
              {f1, d1, f2, d2, CompiledExpr::compile(pp, resolve)});
        }
      }
    }
  }

  std::vector<Expr> euler_sym;
  for (int f = 0; f < mp->n_fields; ++f) {
    euler_sym.push_back(canonical(euler_operator(
        space, L, mp->field_names[static_cast<std::size_t>(f)])));
    mp->euler.push_back(
        CompiledExpr::compile(euler_sym.back(), resolve));
  }

  // ---- conservation identities ----
  const Expr zero = constant(0);
  auto volume_pairing = [&](const ConservedCurrent& cur, bool map_only) {
    std::vector<Expr> terms;
    for (int f = 0; f < mp->n_fields; ++f) {
      if (map_only && f != mp->fx && f != mp->fy) continue;
      const std::string& name = mp->field_names[static_cast<std::size_t>(f)];
      terms.push_back(euler_sym[static_cast<std::size_t>(f)] *
                      cur.characteristics.at(name));
    }
    if (terms.empty()) terms.push_back(zero);
    return make_sum(std::move(terms));
  };
  auto make_identity = [&](const std::string& quantity,
                           const SymmetryGenerator& g, bool uses_stream,
                           const Expr* at_override) {
    const ConservedCurrent cur = noether_current(L, g);
    CompiledIdentity id;
    id.quantity = quantity;
    id.uses_stream = uses_stream;
    id.vol = compile(volume_pairing(cur, false));
    id.At = compile(at_override ? *at_override : cur.components.at("t"));
    id.Aa = compile(cur.components.at("a"));
    id.Ab = compile(cur.components.at("b"));
    if (uses_stream) {
      const Expr at = at_override ? *at_override : cur.components.at("t");
      id.dAt_dt = compile(total_derivative(space, at, "t"));
      id.vol_map = compile(volume_pairing(cur, true));
      id.has_ddt = true;
    }
    return id;
  };
  auto canonically_invariant = [&](const SymmetryGenerator& g, Expr* ic) {
    EquivalenceOptions opts;
    opts.trials = 1;  // the decision here is canonical-only
    const InvarianceReport rep = infinitesimal_criterion(L, g, opts);
    if (ic) *ic = rep.residual;
    return rep.canonically_zero;
  };

  {
    SymmetryGenerator g(space, "time-shift", {{"t", constant(1)}}, {});
    if (canonically_invariant(g, nullptr)) {
      mp->point_identities.push_back(
          make_identity("energy", g, false, nullptr));
    }
  }
  // Coordinate translations: when the gauge term spoils strict invariance,
  // the criterion value is the exact time derivative of a gauge charge c,
  // and A_t - c closes the identity and is gauge-independent.
  for (const char* dep : {"x", "y"}) {
    if (field_index_of(*mp, dep) < 0) continue;
    const std::string quantity =
        std::string("momentum_") + dep;
    SymmetryGenerator g(space, quantity,
                        {}, {{dep, constant(1)}});
    Expr ic = zero;
    if (canonically_invariant(g, &ic)) {
      mp->point_identities.push_back(
          make_identity(quantity, g, false, nullptr));
      continue;
    }
    if (mp->fx < 0 || mp->fy < 0) continue;
    const GaugeExprs ge = gauge_exprs(space, model.gauge);
    const Expr x = space.coordinate("x", std::vector<std::string>{});
    const Expr y = space.coordinate("y", std::vector<std::string>{});
    const Expr along = std::string(dep) == "x" ? x : y;
    const Expr c = partial(ge.P, along) * y - partial(ge.R, along) * x;
    if (!canonical_zero(ic - total_derivative(space, c, "t"))) continue;
    const ConservedCurrent cur = noether_current(L, g);
    const Expr at = cur.components.at("t") - c;
    mp->point_identities.push_back(make_identity(quantity, g, false, &at));
  }
  for (const char* lab : {"a", "b"}) {
    SymmetryGenerator g(space, std::string("label-shift-") + lab,
                        {{lab, constant(1)}}, {});
    if (canonically_invariant(g, nullptr)) {
      mp->point_identities.push_back(make_identity(
          std::string("momentum_") + lab, g, false, nullptr));
    }
  }
  if (mp->fx >= 0 && mp->fy >= 0) {
    const Expr x = space.coordinate("x", std::vector<std::string>{});
    const Expr y = space.coordinate("y", std::vector<std::string>{});
    std::map<std::string, Expr> phi{{"x", -y}, {"y", x}};
    auto add_pair = [&](const char* un, const char* vn) {
      if (field_index_of(*mp, un) >= 0 && field_index_of(*mp, vn) >= 0) {
        phi[un] = -space.coordinate(vn, std::vector<std::string>{});
        phi[vn] = space.coordinate(un, std::vector<std::string>{});
      }
    };
    add_pair("u", "v");
    add_pair("u_g", "v_g");
    SymmetryGenerator g(space, "rotation", {}, std::move(phi));
    if (canonically_invariant(g, nullptr)) {
      mp->point_identities.push_back(
          make_identity("angular", g, false, nullptr));
    }
  }
  {
    const SymmetryGenerator g = make_relabelling(space);
    mp->relabel = make_identity("pv", g, true, nullptr);
  }

  return mp;
}

}  // namespace

QuadratureSet default_rules(int element_degree) {
  const int d = 2 * element_degree + 4;
  return {triangle_rule(d), interval_rule(d), interval_rule(1)};
}

DiscreteProblem::DiscreteProblem(ModelSpec model, SWParams params,
                                 std::shared_ptr<const FESpace> space,
                                 std::shared_ptr<const TimeSlabs> slabs,
                                 std::optional<QuadratureSet> rules)
    : model_(std::move(model)),
      params_(params),
      space_(std::move(space)),
      slabs_(std::move(slabs)) {
  if (!space_) throw FEError("the problem needs a finite-element space");
  if (!slabs_) throw FEError("the problem needs time slabs");
  rules_ = rules ? std::move(*rules) : default_rules(space_->degree());
  programs_ = build_programs(model_);
  for (const std::string& pn : programs_->param_names) {
    if (pn != "f" && pn != "g") {
      throw FEError("no value available for model parameter '" + pn + "'");
    }
  }
  names_ = programs_->field_names;
  fields_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto& w = programs_->windings[i];
    fields_.emplace_back(space_, slabs_, names_[i], w[0], w[1]);
  }
}

int DiscreteProblem::field_index(const std::string& dep) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == dep) return static_cast<int>(i);
  }
  throw FEError("the model has no field named '" + dep + "'");
}

int DiscreteProblem::n_unknowns() const {
  return n_fields() * space_->n_dofs();
}

void DiscreteProblem::set_rest_state() {
  for (FEField& f : fields_) {
    std::fill(f.coeffs().begin(), f.coeffs().end(), 0.0);
  }
}

namespace {

// Fills the shared slot frame at quadrature points of one cell of one slab.
// End-knot coefficients may be overridden by a trial vector (field-major).
class FrameEval {
 public:
  struct LocalBasis {
    double N = 0, Na = 0, Nb = 0;
  };

  FrameEval(const DiscreteProblem& p, const std::vector<double>* end_override,
            int slab)
      : p_(p),
        mp_(p.programs()),
        over_(end_override),
        slab_(slab),
        t0_(p.slabs().knot(slab)),
        dt_(p.slabs().slab_length(slab)),
        nd_(p.space().n_dofs()),
        nl_(p.space().dofs_per_cell()) {
    frame_.assign(static_cast<std::size_t>(mp_.frame_size), 0.0);
    for (int i = 0; i < mp_.n_params; ++i) {
      const std::string& name = mp_.param_names[static_cast<std::size_t>(i)];
      frame_[static_cast<std::size_t>(3 + i)] =
          name == "f" ? p.params().f : p.params().g;
    }
    c0_.resize(static_cast<std::size_t>(mp_.n_fields * nl_));
    c1_.resize(static_cast<std::size_t>(mp_.n_fields * nl_));
    basis_.resize(static_cast<std::size_t>(nl_));
  }

  void load_cell(int tri) {
    tri_ = tri;
    geo_ = p_.space().cell_geometry(tri);
    for (int f = 0; f < mp_.n_fields; ++f) {
      const FEField& field = p_.field(f);
      for (int j = 0; j < nl_; ++j) {
        const int dof = p_.space().cell_dof(tri, j);
        c0_[static_cast<std::size_t>(f * nl_ + j)] = field.coeff(slab_, dof);
        c1_[static_cast<std::size_t>(f * nl_ + j)] =
            over_ ? (*over_)[static_cast<std::size_t>(f * nd_ + dof)]
                  : field.coeff(slab_ + 1, dof);
      }
    }
  }

  int tri() const { return tri_; }
  double detJ() const { return geo_.detJ; }
  const CellGeometry& geometry() const { return geo_; }
  const std::vector<LocalBasis>& basis() const { return basis_; }

  const double* at(const std::array<double, 3>& bary, double tau,
                   const StreamFunction* phi) {
    const FESpace& sp = p_.space();
    sp.shape(bary[1], bary[2], sv_);
    const double a = bary[0] * geo_.corners[0][0] +
                     bary[1] * geo_.corners[1][0] +
                     bary[2] * geo_.corners[2][0];
    const double b = bary[0] * geo_.corners[0][1] +
                     bary[1] * geo_.corners[1][1] +
                     bary[2] * geo_.corners[2][1];
    frame_[0] = a;
    frame_[1] = b;
    frame_[2] = t0_ + tau * dt_;
    const auto& Ji = geo_.Jinv;
    for (int j = 0; j < nl_; ++j) {
      const ShapeValues& s = sv_[static_cast<std::size_t>(j)];
      auto& lb = basis_[static_cast<std::size_t>(j)];
      lb.N = s.N;
      lb.Na = Ji[0][0] * s.d_xi + Ji[1][0] * s.d_eta;
      lb.Nb = Ji[0][1] * s.d_xi + Ji[1][1] * s.d_eta;
    }
    for (int f = 0; f < mp_.n_fields; ++f) {
      double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (int j = 0; j < nl_; ++j) {
        const double cv0 = c0_[static_cast<std::size_t>(f * nl_ + j)];
        const double cv1 = c1_[static_cast<std::size_t>(f * nl_ + j)];
        const double cv = (1.0 - tau) * cv0 + tau * cv1;
        const double cr = (cv1 - cv0) / dt_;
        const ShapeValues& s = sv_[static_cast<std::size_t>(j)];
        const LocalBasis& lb = basis_[static_cast<std::size_t>(j)];
        const double haa = Ji[0][0] * Ji[0][0] * s.d_xixi +
                           2.0 * Ji[0][0] * Ji[1][0] * s.d_xieta +
                           Ji[1][0] * Ji[1][0] * s.d_etaeta;
        const double hab =
            Ji[0][0] * Ji[0][1] * s.d_xixi +
            (Ji[0][0] * Ji[1][1] + Ji[1][0] * Ji[0][1]) * s.d_xieta +
            Ji[1][0] * Ji[1][1] * s.d_etaeta;
        const double hbb = Ji[0][1] * Ji[0][1] * s.d_xixi +
                           2.0 * Ji[0][1] * Ji[1][1] * s.d_xieta +
                           Ji[1][1] * Ji[1][1] * s.d_etaeta;
        acc[0] += cv * lb.N;
        acc[1] += cv * lb.Na;
        acc[2] += cv * lb.Nb;
        acc[3] += cr * lb.N;
        acc[4] += cv * haa;
        acc[5] += cv * hab;
        acc[6] += cv * hbb;
        acc[7] += cr * lb.Na;
        acc[8] += cr * lb.Nb;
      }
      const auto& w = mp_.windings[static_cast<std::size_t>(f)];
      acc[0] += w[0] * a + w[1] * b;
      acc[1] += w[0];
      acc[2] += w[1];
      const int base = mp_.slot(f, 0);
      for (int d = 0; d < 9; ++d) {
        frame_[static_cast<std::size_t>(base + d)] = acc[d];
      }
    }
    if (phi != nullptr) {
      const StreamFunction::Values v = phi->eval(tri_, bary, a, b);
      frame_[static_cast<std::size_t>(mp_.stream_value)] = v.value;
      frame_[static_cast<std::size_t>(mp_.stream_da)] = v.da;
      frame_[static_cast<std::size_t>(mp_.stream_db)] = v.db;
    } else {
      frame_[static_cast<std::size_t>(mp_.stream_value)] = 0.0;
      frame_[static_cast<std::size_t>(mp_.stream_da)] = 0.0;
      frame_[static_cast<std::size_t>(mp_.stream_db)] = 0.0;
    }
    last_bary_ = bary;
    last_tau_ = tau;
    return frame_.data();
  }

  // Aborts with location diagnostics when the deformation degenerates.
  void check_deformation() const {
    if (mp_.fx < 0 || mp_.fy < 0) return;
    const double xa = frame_[static_cast<std::size_t>(mp_.slot(mp_.fx, 1))];
    const double xb = frame_[static_cast<std::size_t>(mp_.slot(mp_.fx, 2))];
    const double ya = frame_[static_cast<std::size_t>(mp_.slot(mp_.fy, 1))];
    const double yb = frame_[static_cast<std::size_t>(mp_.slot(mp_.fy, 2))];
    const double delta = xa * yb - xb * ya;
    if (delta > 0) return;
    std::ostringstream msg;
    msg << "deformation determinant " << delta
        << " is not positive in element " << tri_ << " at barycentric ("
        << last_bary_[0] << ", " << last_bary_[1] << ", " << last_bary_[2]
        << "), slab " << slab_ << " (t = " << (t0_ + last_tau_ * dt_) << ")";
    throw SolverError(msg.str());
  }

  const double* frame() const { return frame_.data(); }

 private:
  const DiscreteProblem& p_;
  const ModelPrograms& mp_;
  const std::vector<double>* over_;
  int slab_;
  double t0_, dt_;
  int nd_, nl_;
  int tri_ = -1;
  CellGeometry geo_;
  std::vector<double> frame_;
  std::vector<double> c0_, c1_;
  std::vector<LocalBasis> basis_;
  std::vector<ShapeValues> sv_;
  std::array<double, 3> last_bary_{};
  double last_tau_ = 0;
};

std::array<double, 3> edge_bary(int local_edge, double s) {
  std::array<double, 3> bary{0.0, 0.0, 0.0};
  bary[static_cast<std::size_t>(local_edge)] = 1.0 - s;
  bary[static_cast<std::size_t>((local_edge + 1) % 3)] = s;
  return bary;
}

struct EdgeFrame {
  double len = 0;
  double na = 0, nb = 0;  // outward unit normal of the cell
};

EdgeFrame edge_frame(const CellGeometry& geo, int local_edge) {
  const auto& p0 = geo.corners[static_cast<std::size_t>(local_edge)];
  const auto& p1 = geo.corners[static_cast<std::size_t>((local_edge + 1) % 3)];
  const double va = p1[0] - p0[0];
  const double vb = p1[1] - p0[1];
  EdgeFrame e;
  e.len = std::sqrt(va * va + vb * vb);
  e.na = vb / e.len;
  e.nb = -va / e.len;
  return e;
}

void check_slab(const DiscreteProblem& p, int slab) {
  if (slab < 0 || slab >= p.slabs().n_slabs()) {
    throw FEError("slab index " + std::to_string(slab) + " out of range");
  }
}

std::string format_history(const std::vector<double>& h) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) os << ", ";
    os << h[i];
  }
  return os.str();
}

}  // namespace

namespace {

// Adds the derivative of one slab's action paired with the spatial basis
// times one half of a knot-centred time hat: the falling half 1 - tau (the
// hat of the slab's start knot) or the rising half tau (the hat of its end
// knot).  `end_override`, when given, replaces the stored end-knot
// coefficients of that slab.
void accumulate_half(const DiscreteProblem& p,
                     const std::vector<double>* end_override, int slab,
                     bool falling, AssemblyRoute route,
                     std::vector<double>& r) {
  const ModelPrograms& mp = p.programs();
  const FESpace& sp = p.space();
  const QuadratureSet& qr = p.rules();
  const int nd = sp.n_dofs();
  const int nl = sp.dofs_per_cell();
  const double dt = p.slabs().slab_length(slab);
  const double slope = (falling ? -1.0 : 1.0) / dt;
  FrameEval fe(p, end_override, slab);

  for (int tri = 0; tri < sp.mesh().n_triangles(); ++tri) {
    fe.load_cell(tri);
    const double detJ = fe.detJ();
    for (int tq = 0; tq < qr.time.size(); ++tq) {
      const double tau = qr.time.points[static_cast<std::size_t>(tq)];
      const double prof = falling ? 1.0 - tau : tau;
      const double wt = dt * qr.time.weights[static_cast<std::size_t>(tq)];
      for (int sq = 0; sq < qr.cell.size(); ++sq) {
        const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
        const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
        const double* frame = fe.at(bary, tau, nullptr);
        fe.check_deformation();
        const double w =
            wt * detJ * qr.cell.weights[static_cast<std::size_t>(sq)];
        const auto& basis = fe.basis();
        if (route == AssemblyRoute::Weak) {
          for (int f = 0; f < mp.n_fields; ++f) {
            double l1[4];
            for (int d = 0; d < 4; ++d) {
              l1[d] = mp.first[static_cast<std::size_t>(f)]
                              [static_cast<std::size_t>(d)]
                          .eval(frame);
            }
            for (int j = 0; j < nl; ++j) {
              const FrameEval::LocalBasis& lb =
                  basis[static_cast<std::size_t>(j)];
              const double t =
                  (l1[0] * lb.N + l1[1] * lb.Na + l1[2] * lb.Nb) * prof +
                  l1[3] * lb.N * slope;
              r[static_cast<std::size_t>(f * nd + sp.cell_dof(tri, j))] +=
                  w * t;
            }
          }
        } else {
          for (int f = 0; f < mp.n_fields; ++f) {
            const double ev =
                mp.euler[static_cast<std::size_t>(f)].eval(frame);
            for (int j = 0; j < nl; ++j) {
              r[static_cast<std::size_t>(f * nd + sp.cell_dof(tri, j))] +=
                  w * ev * basis[static_cast<std::size_t>(j)].N * prof;
            }
          }
        }
      }
    }
    if (route == AssemblyRoute::Strong) {
      // Knot pairing from the integration by parts in time: the hat is 1 at
      // its own knot and 0 at the other end of the slab.
      const double tau_knot = falling ? 0.0 : 1.0;
      const double sign = falling ? -1.0 : 1.0;
      for (int sq = 0; sq < qr.cell.size(); ++sq) {
        const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
        const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
        const double* frame = fe.at(bary, tau_knot, nullptr);
        const double w =
            sign * detJ * qr.cell.weights[static_cast<std::size_t>(sq)];
        const auto& basis = fe.basis();
        for (int f = 0; f < mp.n_fields; ++f) {
          const double lt =
              mp.first[static_cast<std::size_t>(f)][3].eval(frame);
          for (int j = 0; j < nl; ++j) {
            r[static_cast<std::size_t>(f * nd + sp.cell_dof(tri, j))] +=
                w * lt * basis[static_cast<std::size_t>(j)].N;
          }
        }
      }
      // Cell-boundary fluxes from the integration by parts in the labels.
      for (int e = 0; e < 3; ++e) {
        const EdgeFrame ef = edge_frame(fe.geometry(), e);
        for (int tq = 0; tq < qr.time.size(); ++tq) {
          const double tau = qr.time.points[static_cast<std::size_t>(tq)];
          const double prof = falling ? 1.0 - tau : tau;
          const double wt = dt * qr.time.weights[static_cast<std::size_t>(tq)];
          for (int eq = 0; eq < qr.edge.size(); ++eq) {
            const double s = qr.edge.points[static_cast<std::size_t>(eq)];
            const double* frame = fe.at(edge_bary(e, s), tau, nullptr);
            const double w =
                wt * ef.len * qr.edge.weights[static_cast<std::size_t>(eq)];
            const auto& basis = fe.basis();
            for (int f = 0; f < mp.n_fields; ++f) {
              const double flux =
                  mp.first[static_cast<std::size_t>(f)][1].eval(frame) *
                      ef.na +
                  mp.first[static_cast<std::size_t>(f)][2].eval(frame) *
                      ef.nb;
              for (int j = 0; j < nl; ++j) {
                r[static_cast<std::size_t>(f * nd + sp.cell_dof(tri, j))] +=
                    w * flux * basis[static_cast<std::size_t>(j)].N * prof;
              }
            }
          }
        }
      }
    }
  }
}

// Momentum density of the initial state paired with the spatial basis: the
// start condition of the first slab's equations.  The time-derivative slots
// are evaluated as zero (the knot holds a state, not a motion); for the
// velocity-form and geostrophic densities the momenta are velocity-free, so
// this is the exact momentum of the initial data.
void add_initial_momentum(const DiscreteProblem& p, std::vector<double>& r) {
  const ModelPrograms& mp = p.programs();
  const FESpace& sp = p.space();
  const QuadratureSet& qr = p.rules();
  const int nd = sp.n_dofs();
  const int nl = sp.dofs_per_cell();
  std::vector<double> z0(static_cast<std::size_t>(p.n_unknowns()));
  for (int f = 0; f < mp.n_fields; ++f) {
    for (int j = 0; j < nd; ++j) {
      z0[static_cast<std::size_t>(f * nd + j)] = p.field(f).coeff(0, j);
    }
  }
  FrameEval fe(p, &z0, 0);
  for (int tri = 0; tri < sp.mesh().n_triangles(); ++tri) {
    fe.load_cell(tri);
    const double detJ = fe.detJ();
    for (int sq = 0; sq < qr.cell.size(); ++sq) {
      const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
      const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
      const double* frame = fe.at(bary, 0.0, nullptr);
      fe.check_deformation();
      const double w = detJ * qr.cell.weights[static_cast<std::size_t>(sq)];
      const auto& basis = fe.basis();
      for (int f = 0; f < mp.n_fields; ++f) {
        const double lt = mp.first[static_cast<std::size_t>(f)][3].eval(frame);
        for (int j = 0; j < nl; ++j) {
          r[static_cast<std::size_t>(f * nd + sp.cell_dof(tri, j))] +=
              w * lt * basis[static_cast<std::size_t>(j)].N;
        }
      }
    }
  }
}

}  // namespace

std::vector<double> assemble_el_residual(const DiscreteProblem& p,
                                         const std::vector<double>& end_coeffs,
                                         int slab, AssemblyRoute route) {
  check_slab(p, slab);
  if (end_coeffs.size() != static_cast<std::size_t>(p.n_unknowns())) {
    throw FEError("end coefficient vector has wrong size");
  }
  std::vector<double> r(static_cast<std::size_t>(p.n_unknowns()), 0.0);
  if (slab == 0) {
    add_initial_momentum(p, r);
  } else {
    accumulate_half(p, nullptr, slab - 1, /*falling=*/false, route, r);
  }
  accumulate_half(p, &end_coeffs, slab, /*falling=*/true, route, r);
  return r;
}

namespace {

Eigen::MatrixXd assemble_jacobian(const DiscreteProblem& p,
                                  const std::vector<double>& end_coeffs,
                                  int slab) {
  const ModelPrograms& mp = p.programs();
  const FESpace& sp = p.space();
  const QuadratureSet& qr = p.rules();
  const int nd = sp.n_dofs();
  const int nl = sp.dofs_per_cell();
  const int n = p.n_unknowns();
  const double dt = p.slabs().slab_length(slab);
  FrameEval fe(p, &end_coeffs, slab);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  // Rows pair the falling-half tests of this slab's residual; columns are
  // the derivative directions of the end-knot coefficients, whose in-slab
  // profile is the rising half.
  std::vector<double> Tt(static_cast<std::size_t>(4 * nl));
  std::vector<double> Tc(static_cast<std::size_t>(4 * nl));
  std::vector<int> gdof(static_cast<std::size_t>(nl));

  for (int tri = 0; tri < sp.mesh().n_triangles(); ++tri) {
    fe.load_cell(tri);
    const double detJ = fe.detJ();
    for (int j = 0; j < nl; ++j) {
      gdof[static_cast<std::size_t>(j)] = sp.cell_dof(tri, j);
    }
    for (int tq = 0; tq < qr.time.size(); ++tq) {
      const double tau = qr.time.points[static_cast<std::size_t>(tq)];
      const double wt = dt * qr.time.weights[static_cast<std::size_t>(tq)];
      for (int sq = 0; sq < qr.cell.size(); ++sq) {
        const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
        const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
        const double* frame = fe.at(bary, tau, nullptr);
        fe.check_deformation();
        const double w =
            wt * detJ * qr.cell.weights[static_cast<std::size_t>(sq)];
        const auto& basis = fe.basis();
        for (int j = 0; j < nl; ++j) {
          const FrameEval::LocalBasis& lb = basis[static_cast<std::size_t>(j)];
          Tt[static_cast<std::size_t>(4 * j + 0)] = lb.N * (1.0 - tau);
          Tt[static_cast<std::size_t>(4 * j + 1)] = lb.Na * (1.0 - tau);
          Tt[static_cast<std::size_t>(4 * j + 2)] = lb.Nb * (1.0 - tau);
          Tt[static_cast<std::size_t>(4 * j + 3)] = -lb.N / dt;
          Tc[static_cast<std::size_t>(4 * j + 0)] = lb.N * tau;
          Tc[static_cast<std::size_t>(4 * j + 1)] = lb.Na * tau;
          Tc[static_cast<std::size_t>(4 * j + 2)] = lb.Nb * tau;
          Tc[static_cast<std::size_t>(4 * j + 3)] = lb.N / dt;
        }
        for (const auto& term : mp.second) {
          const double v = w * term.prog.eval(frame);
          for (int j = 0; j < nl; ++j) {
            const double tj = Tt[static_cast<std::size_t>(4 * j + term.d1)];
            if (tj == 0.0) continue;
            const int row = term.f1 * nd + gdof[static_cast<std::size_t>(j)];
            for (int k = 0; k < nl; ++k) {
              J(row, term.f2 * nd + gdof[static_cast<std::size_t>(k)]) +=
                  v * tj * Tc[static_cast<std::size_t>(4 * k + term.d2)];
            }
          }
        }
      }
    }
  }
  return J;
}

double norm_inf(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

SlabReport solve_slab(DiscreteProblem& p, const SolverConfig& config,
                      int slab) {
  check_slab(p, slab);
  if (!(config.tolerance > 0)) {
    throw FEError("newton tolerance must be positive");
  }
  const int nd = p.space().n_dofs();
  const int n = p.n_unknowns();
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int f = 0; f < p.n_fields(); ++f) {
    for (int j = 0; j < nd; ++j) {
      z[static_cast<std::size_t>(f * nd + j)] = p.field(f).coeff(slab, j);
    }
  }
  std::vector<double> r = assemble_el_residual(p, z, slab);
  double rn = norm_inf(r);
  SlabReport rep;
  rep.residual_norms.push_back(rn);

  while (rn > config.tolerance) {
    if (rep.iterations >= config.max_iterations) {
      throw SolverError("Newton did not converge in " +
                        std::to_string(config.max_iterations) +
                        " iterations in slab " + std::to_string(slab) +
                        "; residual history: " +
                        format_history(rep.residual_norms));
    }
    const Eigen::MatrixXd J = assemble_jacobian(p, z, slab);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) {
      throw SolverError("singular Jacobian in slab " + std::to_string(slab) +
                        "; residual history: " +
                        format_history(rep.residual_norms));
    }
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
    const Eigen::VectorXd dz = lu.solve(-rv);
    double lambda = 1.0;
    bool accepted = false;
    std::vector<double> zt(static_cast<std::size_t>(n));
    for (int bt = 0; bt <= config.max_backtracks && !accepted; ++bt) {
      for (int i = 0; i < n; ++i) {
        zt[static_cast<std::size_t>(i)] =
            z[static_cast<std::size_t>(i)] + lambda * dz(i);
      }
      bool evaluated = true;
      std::vector<double> rt;
      try {
        rt = assemble_el_residual(p, zt, slab);
      } catch (const SolverError&) {
        evaluated = false;  // stepped over a degenerate deformation
      }
      if (evaluated) {
        const double rtn = norm_inf(rt);
        if (rtn < rn || rtn <= config.tolerance) {
          z.swap(zt);
          r.swap(rt);
          rn = rtn;
          accepted = true;
          break;
        }
      }
      lambda *= config.backtrack;
    }
    if (!accepted) {
      throw SolverError("line search stalled in slab " + std::to_string(slab) +
                        "; residual history: " +
                        format_history(rep.residual_norms));
    }
    rep.residual_norms.push_back(rn);
    ++rep.iterations;
  }

  for (int f = 0; f < p.n_fields(); ++f) {
    for (int j = 0; j < nd; ++j) {
      p.field(f).coeff(slab + 1, j) = z[static_cast<std::size_t>(f * nd + j)];
    }
  }
  return rep;
}

std::vector<SlabReport> march(DiscreteProblem& p, const SolverConfig& config) {
  std::vector<SlabReport> reports;
  for (int n = 0; n < p.slabs().n_slabs(); ++n) {
    reports.push_back(solve_slab(p, config, n));
  }
  return reports;
}

namespace {

// Shared three-term evaluation of one compiled identity over one slab.
IdentityTerms evaluate_identity(const DiscreteProblem& p, int slab,
                                const CompiledIdentity& id,
                                const StreamFunction* phi, bool flip) {
  check_slab(p, slab);
  if (id.uses_stream && phi == nullptr) {
    throw FEError("this identity needs a stream function");
  }
  const FESpace& sp = p.space();
  const LabelMesh& mesh = sp.mesh();
  const QuadratureSet& qr = p.rules();
  const double dt = p.slabs().slab_length(slab);
  FrameEval fe(p, nullptr, slab);
  IdentityTerms out;
  out.quantity = id.quantity;

  for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
    fe.load_cell(tri);
    const double detJ = fe.detJ();
    for (int sq = 0; sq < qr.cell.size(); ++sq) {
      const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
      const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
      const double ws = detJ * qr.cell.weights[static_cast<std::size_t>(sq)];
      for (int tq = 0; tq < qr.time.size(); ++tq) {
        const double tau = qr.time.points[static_cast<std::size_t>(tq)];
        const double* frame = fe.at(bary, tau, phi);
        fe.check_deformation();
        out.volume +=
            dt * qr.time.weights[static_cast<std::size_t>(tq)] * ws *
            id.vol.eval(frame);
      }
      const double at1 = id.At.eval(fe.at(bary, 1.0, phi));
      const double at0 = id.At.eval(fe.at(bary, 0.0, phi));
      out.boundary += ws * (at1 - at0);
    }
  }

  // Label-flux term, accumulated per face so the side order is an explicit
  // (and immaterial) choice; every side uses its own cell's outward normal.
  auto side_flux = [&](const MeshFace::Side& side) {
    fe.load_cell(side.tri);
    const EdgeFrame ef = edge_frame(fe.geometry(), side.local_edge);
    double acc = 0;
    for (int tq = 0; tq < qr.time.size(); ++tq) {
      const double tau = qr.time.points[static_cast<std::size_t>(tq)];
      const double wt = dt * qr.time.weights[static_cast<std::size_t>(tq)];
      for (int eq = 0; eq < qr.edge.size(); ++eq) {
        const double s = qr.edge.points[static_cast<std::size_t>(eq)];
        const double* frame = fe.at(edge_bary(side.local_edge, s), tau, phi);
        acc += wt * ef.len * qr.edge.weights[static_cast<std::size_t>(eq)] *
               (id.Aa.eval(frame) * ef.na + id.Ab.eval(frame) * ef.nb);
      }
    }
    return acc;
  };
  for (const MeshFace& face : mesh.faces()) {
    if (face.n_sides == 1) {
      out.jump += side_flux(face.side[0]);
    } else if (!flip) {
      out.jump += side_flux(face.side[0]) + side_flux(face.side[1]);
    } else {
      out.jump += side_flux(face.side[1]) + side_flux(face.side[0]);
    }
  }

  out.sum = out.volume + out.boundary + out.jump;
  out.scale = std::max({std::abs(out.volume), std::abs(out.boundary),
                        std::abs(out.jump)});
  return out;
}

const CompiledIdentity* find_identity(const DiscreteProblem& p,
                                      TrackedSymmetry s) {
  const std::string name = symmetry_name(s);
  for (const CompiledIdentity& id : p.programs().point_identities) {
    if (id.quantity == name) return &id;
  }
  return nullptr;
}

}  // namespace

IdentityTerms fe_pv_residual(const DiscreteProblem& p, int slab,
                             const StreamFunction& phi,
                             bool flip_face_orientation) {
  IdentityTerms out = evaluate_identity(p, slab, p.programs().relabel, &phi,
                                        flip_face_orientation);
  out.quantity = "pv[" + phi.label() + "]";
  return out;
}

std::vector<TrackedSymmetry> tracked_symmetries(const DiscreteProblem& p) {
  std::vector<TrackedSymmetry> out;
  for (TrackedSymmetry s :
       {TrackedSymmetry::Energy, TrackedSymmetry::MomentumX,
        TrackedSymmetry::MomentumY, TrackedSymmetry::MomentumA,
        TrackedSymmetry::MomentumB, TrackedSymmetry::AngularMomentum}) {
    if (find_identity(p, s) != nullptr) out.push_back(s);
  }
  return out;
}

IdentityTerms fe_symmetry_residual(const DiscreteProblem& p, int slab,
                                   TrackedSymmetry s) {
  const CompiledIdentity* id = find_identity(p, s);
  if (id == nullptr) {
    throw FEError(std::string("the identity '") + symmetry_name(s) +
                  "' is not applicable: the density is not invariant under "
                  "that symmetry");
  }
  return evaluate_identity(p, slab, *id, nullptr, false);
}

NoetherResidualReport noether_report(
    const DiscreteProblem& p, int slab,
    const std::vector<const StreamFunction*>& streams) {
  check_slab(p, slab);
  NoetherResidualReport rep;
  rep.slab = slab;
  rep.t_start = p.slabs().knot(slab);
  rep.t_end = p.slabs().knot(slab + 1);
  for (const CompiledIdentity& id : p.programs().point_identities) {
    rep.entries.push_back(evaluate_identity(p, slab, id, nullptr, false));
  }
  for (const StreamFunction* phi : streams) {
    rep.entries.push_back(fe_pv_residual(p, slab, *phi));
  }
  return rep;
}

double weak_pv_limit_residual(const DiscreteProblem& p, int knot,
                              const StreamFunction& phi) {
  if (knot < 0 || knot >= p.slabs().n_knots()) {
    throw FEError("knot index out of range");
  }
  // One-sided evaluation at the knot instant, taken from the slab above it
  // (from below at the final knot).  Three terms: the coordinate-map
  // residuals paired with the stream characteristics, the exact instant
  // time derivative of the conserved density integral (cells are fixed in
  // label space, so d/dt passes through the integral), and the label-flux
  // closure, which collapses to the flux jumps across faces.  The map-only
  // volume pairing is what makes this a measurement rather than the exact
  // slab identity: any kinematic mismatch carried by auxiliary velocity
  // fields is left exposed, and vanishes under refinement for fields that
  // follow a smooth flow.
  const bool from_below = knot == p.slabs().n_slabs();
  const int slab = from_below ? knot - 1 : knot;
  const double tau = from_below ? 1.0 : 0.0;
  const CompiledIdentity& id = p.programs().relabel;
  const FESpace& sp = p.space();
  const QuadratureSet& qr = p.rules();
  FrameEval fe(p, nullptr, slab);
  double acc = 0;
  for (int tri = 0; tri < sp.mesh().n_triangles(); ++tri) {
    fe.load_cell(tri);
    const double detJ = fe.detJ();
    for (int sq = 0; sq < qr.cell.size(); ++sq) {
      const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
      const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
      const double* frame = fe.at(bary, tau, &phi);
      fe.check_deformation();
      acc += detJ * qr.cell.weights[static_cast<std::size_t>(sq)] *
             (id.vol_map.eval(frame) + id.dAt_dt.eval(frame));
    }
    for (int e = 0; e < 3; ++e) {
      const EdgeFrame ef = edge_frame(fe.geometry(), e);
      for (int eq = 0; eq < qr.edge.size(); ++eq) {
        const double s = qr.edge.points[static_cast<std::size_t>(eq)];
        const double* frame = fe.at(edge_bary(e, s), tau, &phi);
        acc += ef.len * qr.edge.weights[static_cast<std::size_t>(eq)] *
               (id.Aa.eval(frame) * ef.na + id.Ab.eval(frame) * ef.nb);
      }
    }
  }
  return acc;
}

namespace {

ConservedSeries density_series(const DiscreteProblem& p,
                               const CompiledIdentity& id,
                               const StreamFunction* phi,
                               std::string quantity) {
  ConservedSeries out;
  out.quantity = std::move(quantity);
  const FESpace& sp = p.space();
  const QuadratureSet& qr = p.rules();
  for (int knot = 0; knot < p.slabs().n_knots(); ++knot) {
    const int slab = knot == 0 ? 0 : knot - 1;
    const double tau = knot == 0 ? 0.0 : 1.0;
    FrameEval fe(p, nullptr, slab);
    double acc = 0;
    for (int tri = 0; tri < sp.mesh().n_triangles(); ++tri) {
      fe.load_cell(tri);
      const double detJ = fe.detJ();
      for (int sq = 0; sq < qr.cell.size(); ++sq) {
        const auto& pt = qr.cell.points[static_cast<std::size_t>(sq)];
        const std::array<double, 3> bary{1.0 - pt[0] - pt[1], pt[0], pt[1]};
        acc += detJ * qr.cell.weights[static_cast<std::size_t>(sq)] *
               id.At.eval(fe.at(bary, tau, phi));
      }
    }
    out.values.push_back(acc);
  }
  return out;
}

}  // namespace

ConservedSeries conserved_quantity_series(const DiscreteProblem& p,
                                          TrackedSymmetry s) {
  const CompiledIdentity* id = find_identity(p, s);
  if (id == nullptr) {
    throw FEError(std::string("the identity '") + symmetry_name(s) +
                  "' is not applicable: the density is not invariant under "
                  "that symmetry");
  }
  return density_series(p, *id, nullptr, id->quantity);
}

ConservedSeries conserved_quantity_series(const DiscreteProblem& p,
                                          const StreamFunction& phi) {
  return density_series(p, p.programs().relabel, &phi,
                        "pv[" + phi.label() + "]");
}

double series_drift(const ConservedSeries& s) {
  double m = 0;
  for (double v : s.values) m = std::max(m, std::abs(v - s.values.front()));
  return m;
}

}  // namespace labvar
