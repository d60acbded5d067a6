#pragma once

#include <vector>

#include "nlhom/cell_problem.hpp"
#include "nlhom/energy.hpp"

namespace nlhom {

// Finite-T box formula: (1/T^d) min of the nonlocal energy on (0,T)^d cap E
// with v = Xi.x pinned on the band dist(x, boundary) < band_width.
struct BoxProblem {
  double T = 4.0;
  double band_width = 0.0;  // 0 = use the geometry constant k0
  PeriodicDomain dom;
  Kernel kernel;
  double p = 2.0;
  Vec xi{1, 0, 0};
  int res_per_unit = 16;
  double k0 = 0.0;  // geometry constant, used when band_width == 0
};

struct BoxSolution {
  double value = 0.0;
  double grad_sup = 0.0;
  int iterations = 0;
};

BoxSolution box_value(const BoxProblem& prob);
// Same minimization with w T-periodic instead of band-pinned; T = 1 at the
// domain resolution coincides with the cell problem by construction.
BoxSolution box_value_periodic(const BoxProblem& prob);

struct TSweepRow {
  double T = 0.0;
  double box_pinned = 0.0;
  double box_periodic = 0.0;
  double cell = 0.0;
  double gap_pinned = 0.0;
  double gap_periodic = 0.0;
};

std::vector<TSweepRow> t_sweep(const BoxProblem& base, const std::vector<double>& Ts,
                               double cell_value);

struct GammaRow {
  double eps = 0.0;
  double F_recovery = 0.0;
  double F_linear = 0.0;
  double h_hom = 0.0;
};

// Recovery sequence u_eps(x) = Xi.x + eps w(x/eps) evaluated through F_eps on
// Omega, against the plain linear field. Grid spacing is eps / n so nodes land
// on corrector raster centers; omega is given by corner and extent.
std::vector<GammaRow> gamma_experiment(const PeriodicDomain& dom, const Kernel& kernel, double p,
                                       const Vec& xi, const CorrectorSolution& corrector,
                                       const std::vector<double>& eps_list, const Vec& omega_lo,
                                       const Vec& omega_extent);

// The recovery/linear fields themselves (exposed for tests and dumps).
GridField recovery_field(const PeriodicDomain& dom, const Vec& xi,
                         const CorrectorSolution& corrector, double eps, const BoxRegion& omega);
GridField linear_field(const PeriodicDomain& dom, const Vec& xi, double eps,
                       const BoxRegion& omega);

}  // namespace nlhom
