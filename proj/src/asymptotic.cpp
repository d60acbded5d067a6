#include "nlhom/asymptotic.hpp"

#include <cmath>

#include "nlhom/errors.hpp"

namespace nlhom {

namespace {

struct BoxSetup {
  NonlocalOperator op;
  double T;
};

NonlocalOperator make_box_operator(const BoxProblem& prob, bool periodic) {
  if (prob.p <= 1.0) throw ConfigError("box problem requires p > 1");
  int d = prob.dom.dim();
  int res = prob.res_per_unit;
  double h = 1.0 / res;
  Index N = static_cast<Index>(std::llround(prob.T * res));
  if (std::abs(static_cast<double>(N) * h - prob.T) > 1e-9)
    throw GeometryError("box size T must be a multiple of the grid spacing");
  if (N < 2) throw GeometryError("box too small for the grid");

  double band = prob.band_width > 0.0 ? prob.band_width : prob.k0;
  if (!periodic && band <= 0.0)
    throw ConfigError("box problem needs a positive band width (or the k0 constant)");
  if (!periodic && 2.0 * band >= prob.T)
    throw GeometryError("box too small: the Dirichlet band covers all of (0,T)^d");

  double reach = prob.kernel.support_radius();
  Index m = static_cast<Index>(std::floor(reach / h * (1.0 + 1e-12)));
  if (m < 1) throw GeometryError("degenerate stencil: kernel support is below one grid cell");
  std::vector<IVec> offsets;
  std::vector<double> weights, affine;
  IVec o{};
  Index m1 = d > 1 ? m : 0, m2 = d > 2 ? m : 0;
  for (o[0] = -m; o[0] <= m; ++o[0])
    for (o[1] = -m1; o[1] <= m1; ++o[1])
      for (o[2] = -m2; o[2] <= m2; ++o[2]) {
        if (o[0] == 0 && o[1] == 0 && o[2] == 0) continue;
        Vec xi{0, 0, 0};
        for (int a = 0; a < d; ++a) xi[a] = static_cast<double>(o[a]) * h;
        double r = norm(xi, d);
        if (r > reach * (1.0 + 1e-12)) continue;
        offsets.push_back(o);
        weights.push_back(prob.kernel.eval(xi));
        affine.push_back(dot(prob.xi, xi, d));
      }

  double delta = prob.p < 2.0 ? 1e-12 : 0.0;
  NonlocalOperator op(d, {N, N, N}, periodic, prob.p, std::pow(h, 2 * d), delta);
  op.set_stencil(std::move(offsets), std::move(weights), std::move(affine));

  Lattice lat = op.interior();
  std::vector<double> e(static_cast<std::size_t>(lat.size()));
  std::vector<double> free(static_cast<std::size_t>(lat.size()));
  for (Index i = 0; i < lat.size(); ++i) {
    IVec c = lat.unflatten(i);
    Vec x{0, 0, 0};
    for (int a = 0; a < d; ++a) x[a] = (static_cast<double>(c[a]) + 0.5) * h;
    Vec unit = x;  // domain is 1-periodic, so continuum membership needs no scaling
    bool in_e = prob.dom.contains_point(unit);
    e[static_cast<std::size_t>(i)] = in_e ? 1.0 : 0.0;
    if (periodic) {
      free[static_cast<std::size_t>(i)] = in_e ? 1.0 : 0.0;
    } else {
      double distb = x[0] < prob.T - x[0] ? x[0] : prob.T - x[0];
      for (int a = 1; a < d; ++a) {
        double da = x[a] < prob.T - x[a] ? x[a] : prob.T - x[a];
        if (da < distb) distb = da;
      }
      free[static_cast<std::size_t>(i)] = (in_e && distb >= band) ? 1.0 : 0.0;
    }
  }
  op.set_masks(e, free);
  return op;
}

BoxSolution run_box(const BoxProblem& prob, bool periodic) {
  NonlocalOperator op = make_box_operator(prob, periodic);
  SolveReport rep;
  if (prob.p == 2.0) {
    rep = solve_quadratic_cg(op);
  } else {
    double xin = norm(prob.xi, prob.dom.dim());
    rep = solve_descent(op, 1e-8 * (1.0 + std::pow(xin, prob.p - 1.0)));
  }
  BoxSolution sol;
  sol.value = rep.value / std::pow(prob.T, prob.dom.dim());
  sol.grad_sup = rep.grad_sup;
  sol.iterations = rep.iterations;
  return sol;
}

}  // namespace

BoxSolution box_value(const BoxProblem& prob) { return run_box(prob, false); }

BoxSolution box_value_periodic(const BoxProblem& prob) { return run_box(prob, true); }

std::vector<TSweepRow> t_sweep(const BoxProblem& base, const std::vector<double>& Ts,
                               double cell_value) {
  for (std::size_t i = 1; i < Ts.size(); ++i)
    if (Ts[i] <= Ts[i - 1]) throw ConfigError("T sweep values must increase");
  std::vector<TSweepRow> rows;
  for (double T : Ts) {
    BoxProblem prob = base;
    prob.T = T;
    TSweepRow row;
    row.T = T;
    row.box_pinned = box_value(prob).value;
    row.box_periodic = box_value_periodic(prob).value;
    row.cell = cell_value;
    row.gap_pinned = std::abs(row.box_pinned - cell_value);
    row.gap_periodic = std::abs(row.box_periodic - cell_value);
    rows.push_back(row);
  }
  return rows;
}

GridField recovery_field(const PeriodicDomain& dom, const Vec& xi,
                         const CorrectorSolution& corrector, double eps, const BoxRegion& omega) {
  int d = dom.dim();
  int n = dom.resolution;
  if (std::abs(omega.spacing - eps / n) > 1e-12 * omega.spacing)
    throw GeometryError("recovery grid spacing must equal eps / n so nodes hit corrector cells");
  GridField u(omega);
  apply_domain_mask(u, dom, eps);
  Lattice lat = u.lattice();
  Lattice cell = dom.cell_lattice();
  for (Index i = 0; i < lat.size(); ++i) {
    IVec c = lat.unflatten(i);
    Vec x = omega.node_center(c);
    double lin = dot(xi, x, d);
    // x/eps lands on corrector raster centers; wrap the index periodically.
    IVec cc{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      double pos = x[a] / eps * n - 0.5;  // fractional cell index
      Index idx = static_cast<Index>(std::llround(pos));
      idx %= n;
      if (idx < 0) idx += n;
      cc[a] = idx;
    }
    double wv = corrector.w.values[static_cast<std::size_t>(cell.flatten(cc))];
    bool masked = u.mask[static_cast<std::size_t>(i)] != 0.0;
    u.values[static_cast<std::size_t>(i)] = masked ? lin + eps * wv : lin;
  }
  return u;
}

GridField linear_field(const PeriodicDomain& dom, const Vec& xi, double eps,
                       const BoxRegion& omega) {
  GridField u(omega);
  apply_domain_mask(u, dom, eps);
  fill_field(u, [&](const Vec& x) { return dot(xi, x, dom.dim()); });
  return u;
}

std::vector<GammaRow> gamma_experiment(const PeriodicDomain& dom, const Kernel& kernel, double p,
                                       const Vec& xi, const CorrectorSolution& corrector,
                                       const std::vector<double>& eps_list, const Vec& omega_lo,
                                       const Vec& omega_extent) {
  std::vector<GammaRow> rows;
  int n = dom.resolution;
  for (double eps : eps_list) {
    BoxRegion omega(dom.dim(), omega_lo, omega_extent, eps / n);
    EnergySpec spec(eps, p, kernel);
    GridField urec = recovery_field(dom, xi, corrector, eps, omega);
    GridField ulin = linear_field(dom, xi, eps, omega);
    GammaRow row;
    row.eps = eps;
    row.F_recovery = nonlocal_energy(urec, spec).total / omega.volume();
    row.F_linear = nonlocal_energy(ulin, spec).total / omega.volume();
    row.h_hom = corrector.value;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nlhom
