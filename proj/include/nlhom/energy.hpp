#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nlhom/field.hpp"
#include "nlhom/kernel.hpp"

namespace nlhom {

// Integrand callback h(x/eps, xi, z). Must satisfy the stated growth bound
// h <= psi(xi)(|z|^p + 1); this is declared by the caller, not verified.
using Integrand = std::function<double(const Vec& x_scaled, const Vec& xi, double z)>;

struct EnergySpec {
  double eps = 1.0;
  double p = 2.0;
  Kernel kernel;
  Integrand integrand;  // empty = power-law a(xi)|z|^p

  EnergySpec(double e, double pp, Kernel k) : eps(e), p(pp), kernel(std::move(k)) {}
};

struct EnergyBreakdown {
  double total = 0.0;
  Index pair_count = 0;
  std::optional<std::vector<double>> per_cell;
};

// Offsets of the interaction stencil on a given grid: |o| h <= eps R0.
struct Stencil {
  std::vector<IVec> offsets;
  std::vector<double> weight;  // a(o h / eps)
  std::vector<Vec> xi;         // o h / eps
};

Stencil build_stencil(int dim, double h, double eps, const Kernel& kernel);

// Discretized F_eps: eps^{-(d+p)} sum over ordered masked pairs within
// eps R0 of a((y-x)/eps) |u(y)-u(x)|^p h^{2d}.
EnergyBreakdown nonlocal_energy(const GridField& u, const EnergySpec& spec,
                                bool want_per_cell = false);

// Discretized H_eps with a general integrand; xi runs over the same stencil.
EnergyBreakdown general_energy(const GridField& u, const EnergySpec& spec);

// Same sum restricted to pairs with both node centers in A.
// empty_warning (optional) is set when A meets no masked node.
double localized_energy(const GridField& u, const EnergySpec& spec, const BoxRegion& A,
                        bool* empty_warning = nullptr);

double mean_value(const GridField& u, const BoxRegion& A);

// (lhs, rhs) of the mean-value inequality: int_A |u_A - u|^p vs
// (1/|A|) iint_{A x A} |u(x)-u(y)|^p, masked midpoint sums.
std::pair<double, double> poincare_defect(const GridField& u, const BoxRegion& A, double p);

// int_{Omega(eps k)} int_{|xi|<=R} |(u(x+eps xi)-u(x))/eps|^p dxi dx.
double compactness_diagnostic(const GridField& u, const EnergySpec& spec, double k, double R);

}  // namespace nlhom
