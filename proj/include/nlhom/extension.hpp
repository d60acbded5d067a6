#pragma once

#include <vector>

#include "nlhom/energy.hpp"
#include "nlhom/field.hpp"
#include "nlhom/geometry.hpp"

namespace nlhom {

// Quintic smoothstep: 0 for s <= 0, 1 for s >= 1, C^2 in between.
inline double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
}

// 1-d partition bump on (0,2): b(s) = S(s) - S(s-1); translates by Z sum to 1.
inline double partition_bump(double s) { return smoothstep5(s) - smoothstep5(s - 1.0); }

// Product bump for the translated-cube cover; psi^alpha(x) = psi_weight(x - alpha).
inline double psi_weight(const Vec& y, int dim) {
  double w = 1.0;
  for (int a = 0; a < dim; ++a) w *= partition_bump(y[a]);
  return w;
}

// Local extension data on the 2Q window at the domain raster resolution.
// Collar nodes carry the snapped reflection target (a cell of C cap 3Q) and
// the cutoff value; far hole nodes take the component mean.
struct ExtensionPlan {
  PeriodicDomain dom;
  ComponentMask comp;
  double t = 0.0;      // collar width
  double R_est = 0.0;  // estimate radius, t/2 (quarter cell for hole-free E)

  enum Branch : std::uint8_t { component = 0, collar = 1, far = 2 };
  std::vector<std::uint8_t> branch;  // (2n)^d cells
  std::vector<double> phi;           // cutoff at 2Q cells
  std::vector<Index> reflect;        // flat index into the (3n)^d window, -1 if none

  // Empirical bi-Lipschitz diagnostic over same-facet collar pairs.
  double pair_ratio_min = 1.0;
  double pair_ratio_max = 1.0;

  int k() const { return comp.k; }
  double c_tilde() const { return comp.c_tilde; }
  double k0() const { return comp.k0; }

  Lattice window2(int dim) const {
    Index m = 2 * static_cast<Index>(dom.resolution);
    return Lattice(dim, {m, m, m});
  }
  Lattice window3(int dim) const {
    Index m = 3 * static_cast<Index>(dom.resolution);
    return Lattice(dim, {m, m, m});
  }
};

// Collar width default: half the minimum gap between distinct hole translates
// in 3Q (capped below half a unit), zero when E has no holes.
double default_collar_width(const PeriodicDomain& dom);

ExtensionPlan build_plan(const PeriodicDomain& dom, const ComponentMask& comp, double t);

// The 3Q window region and the field skeleton masked on C cap 3Q.
BoxRegion component_window_region(const PeriodicDomain& dom);
GridField component_window_field(const PeriodicDomain& dom, const ComponentMask& comp);

// Local operator Phi: identity on C, blended reflection on the collar, the
// component mean elsewhere. Input masked on C cap 3Q; output covers 2Q.
GridField local_extend(const ExtensionPlan& plan, const GridField& u);

struct LocalEstimates {
  double lp_ratio = 0.0;
  double energy_ratio = 0.0;
  bool lp_infinite = false;
  bool energy_infinite = false;
};

// Ratios of the two local estimates; the energy numerator is restricted to
// D_{R_est}, the denominator runs over all pairs of C cap 3Q.
LocalEstimates local_estimates(const ExtensionPlan& plan, const GridField& u, double p);

// Partition-of-unity gluing L over translated windows. u lives on a
// lattice-aligned unit-spacing-compatible grid masked on Omega cap E;
// the output covers the lattice nodes inside omega_prime.
GridField glue(const ExtensionPlan& plan, const GridField& u, const BoxRegion& omega_prime);

// Scaled operator T_eps: rescale to the unit cell, glue onto the retracted
// region, zero-fill outside Omega(eps k0). Output mask covers all of Omega.
GridField scaled_extend(const ExtensionPlan& plan, const GridField& u, double eps);

struct TheoremRatio {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  bool infinite = false;
};

// Raw ratio of the two sides of the range-R energy estimate at scale eps.
TheoremRatio theorem_ratio(const ExtensionPlan& plan, const GridField& u, double eps, double r,
                           double p);

// Volume-normalized empirical constants: energy densities per unit measure of
// the respective regions, so the values are comparable across eps.
struct EstimateConstants {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  bool c1_infinite = false;
  bool c2_infinite = false;
};

EstimateConstants estimate_constants(const ExtensionPlan& plan, const GridField& u, double eps,
                                     double r, double p);

// Ball-material/diagonal-slab configuration showing that the margin is
// necessary: without it the range-R ratio is > 0 / 0, with it both sides
// vanish.
struct CounterexampleReport {
  double unmargined_numerator = 0.0;
  double unmargined_denominator = 0.0;
  double margined_numerator = 0.0;
  double margined_denominator = 0.0;
  double margined_ratio = 0.0;
};

CounterexampleReport reflection_counterexample(int resolution, double p = 2.0);

}  // namespace nlhom
