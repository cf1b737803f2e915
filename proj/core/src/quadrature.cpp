#include "labvar/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace labvar {

namespace {

// Gauss rule on [-1,1] from the symmetric tridiagonal Jacobi matrix of the
// monic orthogonal-polynomial recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1}
// (Golub–Welsch): nodes are the eigenvalues, weights mu0 times the squared
// first components of the normalized eigenvectors.
void golub_welsch(const std::vector<double>& a, const std::vector<double>& b,
                  double mu0, std::vector<double>& points,
                  std::vector<double>& weights) {
  const int n = static_cast<int>(a.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    J(k, k) = a[k];
    if (k + 1 < n) {
      const double off = std::sqrt(b[k + 1]);
      J(k, k + 1) = off;
      J(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success) {
    throw QuadratureError("quadrature: eigenvalue solve failed");
  }
  points.resize(n);
  weights.resize(n);
  for (int k = 0; k < n; ++k) {
    points[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    weights[k] = mu0 * v0 * v0;
  }
}

// Gauss–Jacobi rule with weight (1-x) on [-1,1], mapped below to the conical
// factor (1-xi) on [0,1].
void gauss_jacobi10(int n, std::vector<double>& points,
                    std::vector<double>& weights) {
  std::vector<double> a(n), b(n);
  for (int k = 0; k < n; ++k) {
    const double dk = k;
    a[k] = -1.0 / ((2 * dk + 1) * (2 * dk + 3));
    b[k] = (k == 0) ? 2.0 : dk * (dk + 1) / ((2 * dk + 1) * (2 * dk + 1));
  }
  golub_welsch(a, b, 2.0, points, weights);
}

int points_for_degree(int degree) {
  if (degree < 0) throw QuadratureError("quadrature: negative degree");
  return degree / 2 + 1;  // smallest n with 2n-1 >= degree
}

}  // namespace

IntervalRule gauss_legendre(int n) {
  if (n < 1) throw QuadratureError("quadrature: need at least one point");
  std::vector<double> a(n, 0.0), b(n);
  b[0] = 2.0;
  for (int k = 1; k < n; ++k) {
    const double dk = k;
    b[k] = dk * dk / (4.0 * dk * dk - 1.0);
  }
  IntervalRule r;
  golub_welsch(a, b, 2.0, r.points, r.weights);
  for (int k = 0; k < n; ++k) {
    r.points[k] = 0.5 * (r.points[k] + 1.0);
    r.weights[k] *= 0.5;
  }
  r.degree = 2 * n - 1;
  return r;
}

IntervalRule interval_rule(int degree) {
  return gauss_legendre(points_for_degree(degree));
}

TriangleRule triangle_rule(int degree) {
  const int n = points_for_degree(degree);
  // Conical product: ∫_T f = ∫_0^1 (1-xi) ∫_0^1 f(xi, eta(1-xi)) deta dxi.
  std::vector<double> xj, wj;
  gauss_jacobi10(n, xj, wj);
  IntervalRule gl = gauss_legendre(n);
  TriangleRule r;
  r.points.reserve(static_cast<std::size_t>(n) * n);
  r.weights.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double xi = 0.5 * (xj[i] + 1.0);
    const double wxi = 0.25 * wj[i];
    for (int j = 0; j < n; ++j) {
      r.points.push_back({xi, gl.points[j] * (1.0 - xi)});
      r.weights.push_back(wxi * gl.weights[j]);
    }
  }
  r.degree = 2 * n - 1;
  return r;
}

}  // namespace labvar
