#pragma once

#include <string>
#include <vector>

#include "nlhom/lattice.hpp"

namespace nlhom {

// Radial interaction kernel a(xi) with compact support |xi| <= R0.
// Discontinuous shapes evaluate to the mean of their one-sided limits exactly
// on |xi| = R0, so lattice-aligned stencils integrate indicators to second
// order instead of first.
class Kernel {
public:
  enum class Shape { ball, gaussian, table };

  // Default: unit-ball indicator in 2-d.
  Kernel() = default;

  static Kernel ball_indicator(int dim, double R0);
  static Kernel truncated_gaussian(int dim, double sigma, double R0);
  static Kernel radial_table(int dim, std::vector<double> radii, std::vector<double> values);

  int dim() const { return dim_; }
  Shape shape() const { return shape_; }
  double support_radius() const { return R0_; }
  // Condition (c2) witness: a >= c on |xi| <= r0.
  double r0() const { return r0_; }
  double c() const { return c_; }

  double eval_radial(double r) const;
  double eval(const Vec& xi) const { return eval_radial(norm(xi, dim_)); }

  // Midpoint quadrature of  int a(xi) (1 + |xi|^p) dxi  over the support box,
  // refined until two successive grids agree to 3 significant digits.
  double moment(double p) const;
  // Same quadrature for  int a(xi) |xi_axis|^p dxi.
  double directional_moment(double p, int axis = 0) const;

  std::string describe() const;

private:
  double quadrature(double p, int mode, int axis) const;

  Shape shape_ = Shape::ball;
  int dim_ = 2;
  double R0_ = 1.0;
  double sigma_ = 1.0;
  double r0_ = 1.0;
  double c_ = 1.0;
  std::vector<double> radii_;
  std::vector<double> values_;
};

}  // namespace nlhom
