#include "nlhom/cell_problem.hpp"

#include <cmath>

#include "nlhom/errors.hpp"

namespace nlhom {

namespace {

CorrectorSolution package(const CellProblem& prob, SolveReport rep) {
  CorrectorSolution sol;
  int d = prob.dom.dim();
  int n = prob.dom.resolution;
  Vec ext{1, 1, 1};
  BoxRegion cell(d, Vec{0, 0, 0}, ext, 1.0 / n);
  sol.w = GridField(cell);
  Lattice lat = prob.dom.cell_lattice();
  for (Index i = 0; i < lat.size(); ++i) {
    bool in_e = prob.dom.indicator[static_cast<std::size_t>(i)] != 0;
    sol.w.mask[static_cast<std::size_t>(i)] = in_e ? 1.0 : 0.0;
    sol.w.values[static_cast<std::size_t>(i)] = in_e ? rep.w[static_cast<std::size_t>(i)] : 0.0;
  }
  sol.value = rep.value;
  sol.grad_sup = rep.grad_sup;
  sol.iterations = rep.iterations;
  sol.smoothed = rep.smoothed;
  return sol;
}

}  // namespace

NonlocalOperator make_cell_operator(const CellProblem& prob) {
  if (prob.p <= 1.0) throw ConfigError("cell problem requires p > 1");
  int d = prob.dom.dim();
  int n = prob.dom.resolution;
  double h = 1.0 / n;

  // Offsets |o| h <= R0; wraparound aliasing is exact because both w and the
  // tiling of E are 1-periodic, so x+o always reads the geometric point x+o.
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
  NonlocalOperator op(d, {n, n, n}, /*periodic=*/true, prob.p, std::pow(h, 2 * d), delta);
  op.set_stencil(std::move(offsets), std::move(weights), std::move(affine));

  Lattice lat = prob.dom.cell_lattice();
  std::vector<double> e(static_cast<std::size_t>(lat.size()));
  for (Index i = 0; i < lat.size(); ++i)
    e[static_cast<std::size_t>(i)] = prob.dom.indicator[static_cast<std::size_t>(i)] != 0 ? 1.0 : 0.0;
  op.set_masks(e, e);
  return op;
}

double cell_energy(const CellProblem& prob, const std::vector<double>& w_cells) {
  NonlocalOperator op = make_cell_operator(prob);
  if (w_cells.size() != static_cast<std::size_t>(op.dof()))
    throw ConfigError("cell_energy: corrector size does not match the unit-cell grid");
  return op.energy(w_cells);
}

CorrectorSolution solve_quadratic(const CellProblem& prob) {
  if (prob.p != 2.0) throw ConfigError("solve_quadratic requires p = 2");
  NonlocalOperator op = make_cell_operator(prob);
  return package(prob, solve_quadratic_cg(op));
}

CorrectorSolution solve_convex(const CellProblem& prob) {
  NonlocalOperator op = make_cell_operator(prob);
  double xin = norm(prob.xi, prob.dom.dim());
  double tol = 1e-8 * (1.0 + std::pow(xin, prob.p - 1.0));
  return package(prob, solve_descent(op, tol));
}

HomogenizedForm homogenized_form(const PeriodicDomain& dom, const Kernel& kernel) {
  HomogenizedForm form;
  int d = dom.dim();
  form.dim = d;
  std::array<double, 3> diag{};
  for (int i = 0; i < d; ++i) {
    CellProblem prob{dom, kernel, 2.0, Vec{0, 0, 0}};
    prob.xi[i] = 1.0;
    diag[static_cast<std::size_t>(i)] = solve_quadratic(prob).value;
    form.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = diag[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      CellProblem prob{dom, kernel, 2.0, Vec{0, 0, 0}};
      prob.xi[i] = 1.0;
      prob.xi[j] = 1.0;
      double mixed = solve_quadratic(prob).value;
      double off = 0.5 * (mixed - diag[static_cast<std::size_t>(i)] - diag[static_cast<std::size_t>(j)]);
      form.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = off;
      form.a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = off;
    }
  return form;
}

}  // namespace nlhom
