#pragma once

#include <vector>

#include "nlhom/kernel.hpp"
#include "nlhom/lattice.hpp"

namespace nlhom {

// Discrete energy shared by the cell and box problems:
//   Q(w) = sum_{x, o} a_o |g_o + w(x+o) - w(x)|^p w0
// over interior cells x and stencil offsets o with both endpoints in E.
// w is zero at non-free cells. The halo of width `pad` realizes either the
// periodic wraparound or the zero exterior, so the inner loops never branch.
class NonlocalOperator {
public:
  NonlocalOperator(int dim, IVec interior_extents, bool periodic, double p,
                   double pair_weight, double pow_delta = 0.0);

  void set_stencil(std::vector<IVec> offsets, std::vector<double> weights,
                   std::vector<double> affine);
  // Masks given on the interior lattice.
  void set_masks(const std::vector<double>& in_E, const std::vector<double>& free_cells);

  const Lattice& interior() const { return interior_; }
  Index dof() const { return interior_.size(); }
  double p() const { return p_; }
  double pow_delta() const { return pow_delta_; }
  const std::vector<double>& free_mask() const { return free_; }
  const std::vector<double>& e_mask() const { return maskE_; }

  double energy(const std::vector<double>& w) const;
  // grad(z) = -2 p sum_o a_o pm(z, o) s(g_o + w(z+o) - w(z)) w0 on free cells.
  void gradient(const std::vector<double>& w, std::vector<double>& grad) const;
  // p = 2 only: out = H v where grad(w) = grad(0) + H w.
  void apply_hessian(const std::vector<double>& v, std::vector<double>& out) const;

  // Pair-graph components over free cells (stencil edges, both ends in E),
  // labels -1 for non-free; used for the mean-zero gauge.
  std::vector<std::int32_t> free_components() const;

private:
  void pad_into(const std::vector<double>& interior_vals, std::vector<double>& padded) const;

  int dim_;
  Lattice interior_;
  Lattice padded_;
  Index pad_ = 0;
  bool periodic_;
  double p_;
  double w0_;
  double pow_delta_;
  std::vector<IVec> offsets_;
  std::vector<double> a_;
  std::vector<double> g_;
  std::vector<double> maskE_;   // interior
  std::vector<double> free_;    // interior
  std::vector<double> maskP_;   // padded copy of maskE_
  mutable std::vector<double> scratch_;  // padded field values
};

struct SolveReport {
  std::vector<double> w;  // interior cells, mean-zero per component
  double value = 0.0;
  double grad_sup = 0.0;
  int iterations = 0;
  bool smoothed = false;  // p < 2 used the smoothed |.|
};

// Conjugate gradients on the stationarity system (p = 2), matrix-free.
SolveReport solve_quadratic_cg(const NonlocalOperator& op, double rel_tol = 1e-10);

// Gradient descent with backtracking line search (convex p > 1). The initial
// step each iteration is the safeguarded Barzilai-Borwein estimate.
SolveReport solve_descent(const NonlocalOperator& op, double grad_tol,
                          long max_iterations = 100000);

void mean_zero_per_component(const NonlocalOperator& op, std::vector<double>& w);

}  // namespace nlhom
