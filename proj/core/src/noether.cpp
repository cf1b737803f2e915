#include "labvar/noether.hpp"

#include <algorithm>

#include "labvar/canonical.hpp"

namespace labvar {

namespace {

/// Generator components may involve only base coordinates: independents,
/// zeroth-order dependents, parameters, and opaque functions of those.
void validate_component(const JetSpace& space, const std::string& what, const Expr& e) {
  for (const auto& s : free_symbols(e)) {
    if (s->role == SymbolRole::JetCoordinate && !s->index.empty())
      throw JetSpaceError("generator component " + what +
                          " depends on the derivative coordinate " + s->display() +
                          "; only base coordinates are allowed");
    if (s->role == SymbolRole::JetCoordinate && !space.has_dependent(s->base))
      throw JetSpaceError("generator component " + what + " uses foreign variable " +
                          s->display());
    if (s->role == SymbolRole::Independent && !space.has_independent(s->name))
      throw JetSpaceError("generator component " + what + " uses foreign variable " +
                          s->display());
  }
}

Expr sum_of(std::vector<Expr> terms) { return make_sum(std::move(terms)); }

}  // namespace

SymmetryGenerator::SymmetryGenerator(const JetSpace& space, std::string name,
                                     std::map<std::string, Expr> xi,
                                     std::map<std::string, Expr> phi)
    : space_(&space), name_(std::move(name)), xi_(std::move(xi)), phi_(std::move(phi)) {
  for (const auto& n : space.independents())
    if (!xi_.count(n)) xi_[n] = constant(0);
  for (const auto& n : space.dependents())
    if (!phi_.count(n)) phi_[n] = constant(0);
  for (const auto& [n, e] : xi_) {
    if (!space.has_independent(n))
      throw JetSpaceError("generator '" + name_ + "': unknown independent variable '" +
                          n + "'");
    validate_component(space, "xi^" + n, e);
  }
  for (const auto& [n, e] : phi_) {
    if (!space.has_dependent(n))
      throw JetSpaceError("generator '" + name_ + "': unknown dependent variable '" + n +
                          "'");
    validate_component(space, "phi^" + n, e);
  }
}

const Expr& SymmetryGenerator::xi(const std::string& indep) const {
  auto it = xi_.find(indep);
  if (it == xi_.end())
    throw JetSpaceError("generator '" + name_ + "': no xi component for '" + indep + "'");
  return it->second;
}

const Expr& SymmetryGenerator::phi(const std::string& dep) const {
  auto it = phi_.find(dep);
  if (it == phi_.end())
    throw JetSpaceError("generator '" + name_ + "': no phi component for '" + dep + "'");
  return it->second;
}

Expr prolong(const SymmetryGenerator& g, const Expr& jet_coordinate) {
  if (jet_coordinate->kind != ExprKind::Symbol ||
      jet_coordinate->role != SymbolRole::JetCoordinate)
    throw JetSpaceError("prolong expects a jet coordinate, got " +
                        to_string(jet_coordinate));
  const JetSpace& sp = g.space();
  if (!sp.has_dependent(jet_coordinate->base))
    throw JetSpaceError("prolong: foreign coordinate " + jet_coordinate->display());
  if (jet_coordinate->index.empty()) return g.phi(jet_coordinate->base);

  std::vector<std::string> idx = jet_coordinate->index;
  const std::string i = idx.back();
  idx.pop_back();
  Expr below = prolong(g, sp.coordinate(jet_coordinate->base, idx));
  Expr r = total_derivative(sp, below, i);
  for (const auto& j : sp.independents()) {
    std::vector<std::string> up = idx;
    up.push_back(j);
    r = r - sp.coordinate(jet_coordinate->base, up) * total_derivative(sp, g.xi(j), i);
  }
  return r;
}

Expr characteristic(const SymmetryGenerator& g, const std::string& dep) {
  const JetSpace& sp = g.space();
  std::vector<Expr> terms{g.phi(dep)};
  for (const auto& i : sp.independents())
    terms.push_back(-(sp.coordinate(dep, std::vector<std::string>{i}) * g.xi(i)));
  return sum_of(std::move(terms));
}

namespace {

/// The invariance expression of (L, g); vanishes identically iff the action
/// is unchanged to first order by the flow of g.
Expr criterion_expression(const Expr& L, const SymmetryGenerator& g) {
  const JetSpace& sp = g.space();
  std::vector<Expr> terms;
  for (const auto& i : sp.independents()) {
    Expr dL = partial(L, sp.independent(i));
    if (!is_zero(dL)) terms.push_back(g.xi(i) * dL);
  }
  for (const auto& s : free_symbols(L)) {
    if (s->role != SymbolRole::JetCoordinate) continue;
    Expr dL = partial(L, s);
    if (!is_zero(dL)) terms.push_back(prolong(g, s) * dL);
  }
  std::vector<Expr> div;
  for (const auto& i : sp.independents())
    div.push_back(total_derivative(sp, g.xi(i), i));
  terms.push_back(L * sum_of(std::move(div)));
  return sum_of(std::move(terms));
}

void verify_current_identity(const Expr& L, const SymmetryGenerator& g,
                             const ConservedCurrent& cur) {
  const JetSpace& sp = g.space();
  std::vector<Expr> lhs;
  for (const auto& dep : sp.dependents())
    lhs.push_back(cur.characteristics.at(dep) * euler_operator(sp, L, dep));
  for (const auto& i : sp.independents())
    lhs.push_back(total_derivative(sp, cur.components.at(i), i));
  Expr residual = sum_of(std::move(lhs)) - criterion_expression(L, g);
  if (canonical_zero(residual)) return;
  auto rep = check_equivalent(residual, constant(0));
  if (!rep.equivalent)
    throw IdentityError("current for generator '" + g.name() +
                        "' fails its defining identity; residual: " + print(residual));
}

}  // namespace

InvarianceReport infinitesimal_criterion(const Expr& L, const SymmetryGenerator& g,
                                         const EquivalenceOptions& opts) {
  InvarianceReport rep;
  rep.residual = criterion_expression(L, g);
  if (canonical_zero(rep.residual)) {
    rep.invariant = true;
    rep.canonically_zero = true;
    return rep;
  }
  auto eq = check_equivalent(rep.residual, constant(0), opts);
  rep.invariant = eq.equivalent;
  rep.max_residual = eq.max_residual;
  return rep;
}

ConservedCurrent noether_current_1d(const Expr& L, const SymmetryGenerator& g) {
  const JetSpace& sp = g.space();
  if (sp.independents().size() != 1)
    throw JetSpaceError("noether_current_1d requires exactly one independent variable");
  const std::string x = sp.independents()[0];

  int order = 0;
  for (const auto& s : free_symbols(L))
    if (s->role == SymbolRole::JetCoordinate)
      order = std::max(order, static_cast<int>(s->index.size()));
  if (order > 2)
    throw JetSpaceError("noether_current_1d supports derivative order <= 2, found " +
                        std::to_string(order));

  ConservedCurrent cur;
  cur.generator_name = g.name();
  std::vector<Expr> terms{L * g.xi(x)};
  for (const auto& dep : sp.dependents()) {
    Expr Q = characteristic(g, dep);
    cur.characteristics[dep] = Q;
    Expr L1 = partial(L, sp.coordinate(dep, std::vector<std::string>{x}));
    Expr L2 = partial(L, sp.coordinate(dep, std::vector<std::string>{x, x}));
    terms.push_back((L1 - total_derivative(sp, L2, x)) * Q);
    if (!is_zero(L2)) terms.push_back(L2 * total_derivative(sp, Q, x));
  }
  cur.components[x] = sum_of(std::move(terms));
  verify_current_identity(L, g, cur);
  return cur;
}

ConservedCurrent noether_current(const Expr& L, const SymmetryGenerator& g) {
  const JetSpace& sp = g.space();
  for (const auto& s : free_symbols(L))
    if (s->role == SymbolRole::JetCoordinate && s->index.size() > 1)
      throw JetSpaceError(
          "noether_current requires a first-order action density; found " +
          s->display());

  ConservedCurrent cur;
  cur.generator_name = g.name();
  for (const auto& dep : sp.dependents()) cur.characteristics[dep] = characteristic(g, dep);
  for (const auto& i : sp.independents()) {
    std::vector<Expr> terms{L * g.xi(i)};
    for (const auto& dep : sp.dependents()) {
      Expr Li = partial(L, sp.coordinate(dep, std::vector<std::string>{i}));
      if (!is_zero(Li)) terms.push_back(Li * cur.characteristics[dep]);
    }
    cur.components[i] = sum_of(std::move(terms));
  }
  verify_current_identity(L, g, cur);
  return cur;
}

SymmetryGenerator relabelling_generator(JetSpace& space, const std::string& stream_name,
                                        const std::string& a, const std::string& b) {
  Expr chi = space.declare_function(stream_name, {a, b});
  Expr chi_a = partial(chi, space.independent(a));
  Expr chi_b = partial(chi, space.independent(b));
  std::map<std::string, Expr> xi{{a, chi_b}, {b, -chi_a}};
  return SymmetryGenerator(space, "relabel(" + stream_name + ")", std::move(xi), {});
}

Expr pv_from_momenta(const Expr& L, JetSpace& space, const std::string& a,
                     const std::string& b, const std::string& t) {
  for (const auto& n : {a, b, t})
    if (!space.has_independent(n))
      throw JetSpaceError("pv_from_momenta: unknown independent variable '" + n + "'");

  // Preconditions: invariance under both label translations and under
  // area-preserving relabellings.
  for (const auto& n : {a, b}) {
    SymmetryGenerator tr(space, "translate_" + n, {{n, constant(1)}}, {});
    auto rep = infinitesimal_criterion(L, tr);
    if (!rep.invariant)
      throw IdentityError("pv_from_momenta: density is not invariant under " + n +
                          "-translations; residual: " + print(rep.residual));
  }
  {
    SymmetryGenerator rel = relabelling_generator(space, "pv_probe_stream", a, b);
    auto rep = infinitesimal_criterion(L, rel);
    if (!rep.invariant)
      throw IdentityError("pv_from_momenta: density is not relabelling-invariant; "
                          "residual: " + print(rep.residual));
  }

  auto momentum_density = [&](const std::string& dir) {
    std::vector<Expr> terms;
    for (const auto& dep : space.dependents()) {
      Expr Lt = partial(L, space.coordinate(dep, std::vector<std::string>{t}));
      if (!is_zero(Lt))
        terms.push_back(space.coordinate(dep, std::vector<std::string>{dir}) * Lt);
    }
    return sum_of(std::move(terms));
  };
  return total_derivative(space, momentum_density(a), b) -
         total_derivative(space, momentum_density(b), a);
}

}  // namespace labvar
