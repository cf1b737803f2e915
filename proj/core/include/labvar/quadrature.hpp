#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace labvar {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quadrature on the reference interval [0,1]: sum_i w_i f(x_i) = ∫_0^1 f,
// exact for polynomials of degree <= `degree`.
struct IntervalRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(points.size()); }
};

// Quadrature on the reference triangle {(x,y): x,y >= 0, x+y <= 1}:
// sum_i w_i f(p_i) = ∫_T f, exact for total degree <= `degree`.
// Weights sum to 1/2 (the reference area).
struct TriangleRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(points.size()); }
};

// Gauss–Legendre rule with n points on [0,1] (exact through degree 2n-1).
IntervalRule gauss_legendre(int n);
// Smallest Gauss–Legendre rule exact for the given polynomial degree.
IntervalRule interval_rule(int degree);
// Conical-product rule on the reference triangle, exact for the given total
// degree (built from Gauss–Jacobi and Gauss–Legendre factors).
TriangleRule triangle_rule(int degree);

}  // namespace labvar
