#pragma once

#include <array>

#include "nlhom/field.hpp"
#include "nlhom/geometry.hpp"
#include "nlhom/kernel.hpp"
#include "nlhom/nonlocal_operator.hpp"

namespace nlhom {

// Periodic cell problem: minimize the single-period nonlocal energy over
// correctors w = v - Xi.x with w 1-periodic on the unit-cell grid.
struct CellProblem {
  PeriodicDomain dom;
  Kernel kernel;
  double p = 2.0;
  Vec xi{1, 0, 0};
};

struct CorrectorSolution {
  GridField w;        // unit-cell field, masked on E cells, mean-zero gauge
  double value = 0.0; // h_hom(Xi)
  double grad_sup = 0.0;
  int iterations = 0;
  bool smoothed = false;
};

// Builds the single-period operator: outer integral over the unit cell,
// offsets over the full kernel stencil with periodic wraparound of w and E.
NonlocalOperator make_cell_operator(const CellProblem& prob);

double cell_energy(const CellProblem& prob, const std::vector<double>& w_cells);

CorrectorSolution solve_quadratic(const CellProblem& prob);
CorrectorSolution solve_convex(const CellProblem& prob);

// h_hom as a quadratic form (p = 2): diagonal entries from solve_quadratic
// on the basis directions, off-diagonal by polarization.
struct HomogenizedForm {
  int dim = 2;
  std::array<std::array<double, 3>, 3> a{};
  double quad(const Vec& xi) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s += xi[i] * a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * xi[j];
    return s;
  }
};

HomogenizedForm homogenized_form(const PeriodicDomain& dom, const Kernel& kernel);

}  // namespace nlhom
