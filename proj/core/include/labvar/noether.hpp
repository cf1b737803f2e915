#pragma once

#include <map>
#include <string>

#include "labvar/calculus.hpp"
#include "labvar/numeric.hpp"

namespace labvar {

/// Thrown when a claimed structural identity fails to verify.
struct IdentityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Infinitesimal point transformation on a jet space: one component per
/// independent variable (xi) and per dependent variable (phi), each an
/// expression in base coordinates only (independents, zeroth-order
/// dependents, parameters, and opaque functions of those).
class SymmetryGenerator {
 public:
  SymmetryGenerator(const JetSpace& space, std::string name,
                    std::map<std::string, Expr> xi, std::map<std::string, Expr> phi);

  const JetSpace& space() const { return *space_; }
  const std::string& name() const { return name_; }
  const Expr& xi(const std::string& indep) const;
  const Expr& phi(const std::string& dep) const;

 private:
  const JetSpace* space_;
  std::string name_;
  std::map<std::string, Expr> xi_;
  std::map<std::string, Expr> phi_;
};

/// Prolongation coefficient of the generator at a jet coordinate: the
/// infinitesimal change of that derivative coordinate under the flow.
/// Computed by the recursion  phi[J,i] = D_i phi[J] - sum_j u_{J,j} D_i xi^j.
Expr prolong(const SymmetryGenerator& g, const Expr& jet_coordinate);

/// Characteristic Q^alpha = phi^alpha - sum_i u^alpha_i xi^i.
Expr characteristic(const SymmetryGenerator& g, const std::string& dep);

struct InvarianceReport {
  Expr residual;            ///< expression that vanishes iff L is invariant
  bool invariant = false;
  bool canonically_zero = false;
  double max_residual = 0;  ///< over sampled points (0 when canonical)
};

/// Infinitesimal invariance test for the action density L:
///   sum_i xi^i dL/dindep_i + sum_{alpha,J} phi^alpha_[J] dL/du^alpha_J
///   + L * sum_i D_i xi^i.
InvarianceReport infinitesimal_criterion(const Expr& L, const SymmetryGenerator& g,
                                         const EquivalenceOptions& opts = {});

/// A conserved current paired with its generator.  Construction verifies the
/// structural identity
///   sum_alpha Q^alpha E_alpha(L) + sum_i D_i A_i == (criterion expression)
/// exactly, and throws IdentityError if it does not hold.
struct ConservedCurrent {
  std::string generator_name;
  std::map<std::string, Expr> components;       ///< independent name -> A_i
  std::map<std::string, Expr> characteristics;  ///< dependent name -> Q^alpha
};

/// Current of a generator for Lagrangians in one independent variable, up to
/// second derivative order:
///   A = L xi + sum_a (dL/du_x - D_x dL/du_xx) Q^a + sum_a dL/du_xx D_x Q^a.
ConservedCurrent noether_current_1d(const Expr& L, const SymmetryGenerator& g);

/// Current for first-order Lagrangians in any number of independent
/// variables:  A_i = L xi^i + sum_a dL/du^a_i Q^a.
ConservedCurrent noether_current(const Expr& L, const SymmetryGenerator& g);

/// Generator of area-preserving relabellings of the plane (a, b) driven by an
/// opaque stream function:  xi^a = chi_b, xi^b = -chi_a, phi = 0.  The
/// function name must be undeclared in the space; it is declared here.
SymmetryGenerator relabelling_generator(JetSpace& space, const std::string& stream_name,
                                        const std::string& a = "a",
                                        const std::string& b = "b");

/// Curl, in the label plane, of the momentum densities conjugate to label
/// translations:
///   D_b( sum_a u^a_A dL/du^a_T ) - D_a( sum_a u^a_B dL/du^a_T )
/// where A, B are the two label directions and T is time.  Requires L to be
/// invariant under both label translations and under relabellings (checked;
/// IdentityError otherwise).  For the shallow-water densities this equals
/// minus the potential vorticity.
Expr pv_from_momenta(const Expr& L, JetSpace& space, const std::string& a = "a",
                     const std::string& b = "b", const std::string& t = "t");

}  // namespace labvar
