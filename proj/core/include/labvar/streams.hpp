#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "labvar/fespace.hpp"

namespace labvar {

/// A scalar test function of the labels, supplied with exact first
/// derivatives.  Evaluation is cell-local: the caller passes the triangle,
/// the barycentric point, and that triangle's frame coordinates (a, b), so
/// piecewise definitions and periodic frames need no global unwrapping.
class StreamFunction {
 public:
  struct Values {
    double value = 0.0;
    double da = 0.0;
    double db = 0.0;
  };

  virtual ~StreamFunction() = default;
  virtual std::string label() const = 0;
  virtual Values eval(int tri, const std::array<double, 3>& barycentric,
                      double a, double b) const = 0;
};

/// c_a * a + c_b * b + c_0 in the frame coordinates of each cell.
class LinearStream : public StreamFunction {
 public:
  LinearStream(std::string label, double ca, double cb, double c0 = 0.0);
  std::string label() const override { return label_; }
  Values eval(int tri, const std::array<double, 3>& barycentric, double a,
              double b) const override;

 private:
  std::string label_;
  double ca_, cb_, c0_;
};

/// Time-independent scalar field over an FESpace: one coefficient per dof.
struct SpatialField {
  std::shared_ptr<const FESpace> space;
  std::vector<double> coeffs;
};

/// Piecewise-polynomial stream given by a SpatialField; derivatives are the
/// cell-local polynomial derivatives.
class FieldStream : public StreamFunction {
 public:
  FieldStream(SpatialField field, std::string label);
  std::string label() const override { return label_; }
  Values eval(int tri, const std::array<double, 3>& barycentric, double a,
              double b) const override;

 private:
  SpatialField field_;
  std::string label_;
};

/// The nodal basis function of one dof (a "hat" for degree 1).
FieldStream hat_stream(std::shared_ptr<const FESpace> space, int dof);

/// Compactly supported radial C^2 bump of quintic profile: with
/// s = |r| / radius,  value = 1 - s^3 (10 - 15 s + 6 s^2) for s < 1 and 0
/// outside.  On a periodic mesh the offset to the center uses the minimal
/// image, so the support must fit in a periodic box (radius < half the
/// shorter period; checked).
class QuinticBumpStream : public StreamFunction {
 public:
  QuinticBumpStream(double center_a, double center_b, double radius,
                    const LabelMesh* wrap = nullptr);
  std::string label() const override { return "bump"; }
  Values eval(int tri, const std::array<double, 3>& barycentric, double a,
              double b) const override;

 private:
  double ca_, cb_, radius_;
  bool wrap_ = false;
  double La_ = 0.0, Lb_ = 0.0;
};

/// Nodal interpolant of a stream onto a finite-element space, packaged as a
/// stream again (a piecewise-polynomial test function with honest cell-local
/// derivatives).
FieldStream interpolate_stream(std::shared_ptr<const FESpace> space,
                               const StreamFunction& f, std::string label);

}  // namespace labvar
