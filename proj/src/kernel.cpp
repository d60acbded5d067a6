#include "nlhom/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlhom/errors.hpp"

namespace nlhom {

namespace {
constexpr double kBoundaryTol = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

Kernel Kernel::ball_indicator(int dim, double R0) {
  if (R0 <= 0) throw ConfigError("kernel support radius must be positive");
  Kernel k;
  k.shape_ = Shape::ball;
  k.dim_ = dim;
  k.R0_ = R0;
  k.r0_ = R0;
  k.c_ = 1.0;
  return k;
}

Kernel Kernel::truncated_gaussian(int dim, double sigma, double R0) {
  if (R0 <= 0 || sigma <= 0) throw ConfigError("gaussian kernel needs positive sigma and radius");
  Kernel k;
  k.shape_ = Shape::gaussian;
  k.dim_ = dim;
  k.R0_ = R0;
  k.sigma_ = sigma;
  k.r0_ = std::min(sigma, R0);
  k.c_ = k.eval_radial(k.r0_);
  return k;
}

Kernel Kernel::radial_table(int dim, std::vector<double> radii, std::vector<double> values) {
  if (radii.size() < 2 || radii.size() != values.size())
    throw ConfigError("radial table needs at least two (r, a) pairs of equal length");
  if (radii.front() != 0.0) throw ConfigError("radial table must start at r = 0");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) throw ConfigError("radial table radii must increase");
  for (double v : values)
    if (v < 0) throw ConfigError("radial table values must be nonnegative");
  Kernel k;
  k.shape_ = Shape::table;
  k.dim_ = dim;
  k.R0_ = radii.back();
  k.radii_ = std::move(radii);
  k.values_ = std::move(values);
  // (c2) witness: the largest prefix with strictly positive values.
  double r0 = 0.0, c = k.values_[0];
  for (std::size_t i = 0; i < k.values_.size() && k.values_[i] > 0; ++i) {
    r0 = k.radii_[i];
    c = std::min(c, k.values_[i]);
  }
  if (r0 <= 0.0) {
    r0 = k.radii_[1];
    c = 0.0;
  }
  k.r0_ = r0;
  k.c_ = c;
  return k;
}

double Kernel::eval_radial(double r) const {
  r = std::abs(r);
  double edge = std::abs(r - R0_);
  switch (shape_) {
    case Shape::ball:
      if (edge <= kBoundaryTol * std::max(1.0, R0_)) return 0.5;
      return r < R0_ ? 1.0 : 0.0;
    case Shape::gaussian: {
      double norm = std::pow(kTwoPi * sigma_ * sigma_, -0.5 * dim_);
      double g = norm * std::exp(-0.5 * r * r / (sigma_ * sigma_));
      if (edge <= kBoundaryTol * std::max(1.0, R0_)) return 0.5 * g;
      return r < R0_ ? g : 0.0;
    }
    case Shape::table: {
      if (r > R0_ + kBoundaryTol) return 0.0;
      if (r >= radii_.back()) {
        double v = values_.back();
        return edge <= kBoundaryTol * std::max(1.0, R0_) && v > 0 ? 0.5 * v : v;
      }
      auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
      std::size_t hi = static_cast<std::size_t>(it - radii_.begin());
      if (hi == 0) return values_[0];
      std::size_t lo = hi - 1;
      double t = (r - radii_[lo]) / (radii_[hi] - radii_[lo]);
      return values_[lo] + t * (values_[hi] - values_[lo]);
    }
  }
  return 0.0;
}

double Kernel::quadrature(double p, int mode, int axis) const {
  // mode 0: (1 + |xi|^p), mode 1: |xi_axis|^p.
  auto pass = [&](Index N) {
    double h = 2.0 * R0_ / static_cast<double>(N);
    double w = std::pow(h, dim_);
    Index n1 = dim_ > 1 ? N : 1, n2 = dim_ > 2 ? N : 1;
    double sum = 0.0;
    for (Index i0 = 0; i0 < N; ++i0)
      for (Index i1 = 0; i1 < n1; ++i1)
        for (Index i2 = 0; i2 < n2; ++i2) {
          Vec xi{-R0_ + (i0 + 0.5) * h, 0, 0};
          if (dim_ > 1) xi[1] = -R0_ + (i1 + 0.5) * h;
          if (dim_ > 2) xi[2] = -R0_ + (i2 + 0.5) * h;
          double a = eval(xi);
          if (a == 0.0) continue;
          double f = mode == 0 ? 1.0 + std::pow(norm(xi, dim_), p)
                               : std::pow(std::abs(xi[axis]), p);
          sum += a * f;
        }
    return sum * w;
  };
  Index N = dim_ == 3 ? 32 : 64;
  double prev = pass(N);
  for (int it = 0; it < 6; ++it) {
    N *= 2;
    double cur = pass(N);
    if (!std::isfinite(cur)) throw SolverError("kernel moment quadrature did not stay finite");
    if (std::abs(cur - prev) <= 1e-3 * std::abs(cur)) return cur;
    prev = cur;
    if (dim_ == 3 && N >= 256) break;
    if (dim_ < 3 && N >= 2048) break;
  }
  return prev;
}

double Kernel::moment(double p) const {
  if (p <= 1) throw ConfigError("moment exponent p must exceed 1");
  return quadrature(p, 0, 0);
}

double Kernel::directional_moment(double p, int axis) const {
  if (p <= 1) throw ConfigError("moment exponent p must exceed 1");
  if (axis < 0 || axis >= dim_) throw ConfigError("directional moment axis out of range");
  return quadrature(p, 1, axis);
}

std::string Kernel::describe() const {
  std::ostringstream os;
  switch (shape_) {
    case Shape::ball:
      os << "ball-indicator(R0=" << R0_ << ")";
      break;
    case Shape::gaussian:
      os << "truncated-gaussian(sigma=" << sigma_ << ", R0=" << R0_ << ")";
      break;
    case Shape::table:
      os << "radial-table(" << radii_.size() << " knots, R0=" << R0_ << ")";
      break;
  }
  os << " r0=" << r0_ << " c=" << c_;
  return os.str();
}

}  // namespace nlhom
