#include "nlhom/nonlocal_operator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "nlhom/errors.hpp"
#include "nlhom/pair_kernels.hpp"
#include "nlhom/parallel.hpp"

namespace nlhom {

NonlocalOperator::NonlocalOperator(int dim, IVec interior_extents, bool periodic, double p,
                                   double pair_weight, double pow_delta)
    : dim_(dim),
      interior_(dim, interior_extents),
      periodic_(periodic),
      p_(p),
      w0_(pair_weight),
      pow_delta_(pow_delta) {}

void NonlocalOperator::set_stencil(std::vector<IVec> offsets, std::vector<double> weights,
                                   std::vector<double> affine) {
  offsets_ = std::move(offsets);
  a_ = std::move(weights);
  g_ = std::move(affine);
  pad_ = 1;
  for (const auto& o : offsets_)
    for (int a = 0; a < dim_; ++a) pad_ = std::max(pad_, std::abs(o[a]));
  IVec pn{1, 1, 1};
  for (int a = 0; a < dim_; ++a) pn[a] = interior_.n[a] + 2 * pad_;
  padded_ = Lattice(dim_, pn);
  scratch_.assign(static_cast<std::size_t>(padded_.size()), 0.0);
}

void NonlocalOperator::pad_into(const std::vector<double>& interior_vals,
                                std::vector<double>& padded) const {
  padded.assign(static_cast<std::size_t>(padded_.size()), 0.0);
  IVec i{};
  for (i[0] = 0; i[0] < padded_.n[0]; ++i[0])
    for (i[1] = 0; i[1] < padded_.n[1]; ++i[1])
      for (i[2] = 0; i[2] < padded_.n[2]; ++i[2]) {
        IVec src{0, 0, 0};
        bool inside = true;
        for (int a = 0; a < dim_; ++a) {
          Index c = i[a] - pad_;
          if (periodic_) {
            c %= interior_.n[a];
            if (c < 0) c += interior_.n[a];
          } else if (c < 0 || c >= interior_.n[a]) {
            inside = false;
          }
          src[a] = c;
        }
        if (inside)
          padded[static_cast<std::size_t>(padded_.flatten(i))] =
              interior_vals[static_cast<std::size_t>(interior_.flatten(src))];
      }
}

void NonlocalOperator::set_masks(const std::vector<double>& in_E,
                                 const std::vector<double>& free_cells) {
  maskE_ = in_E;
  free_ = free_cells;
  pad_into(maskE_, maskP_);
}

// fn(padded_base, interior_base, row_length); rows along axis dim-1.
template <typename Fn>
static void interior_rows(const Lattice& interior, const Lattice& padded, int dim, Index pad,
                          Fn&& fn) {
  if (dim == 1) {
    fn(padded.flatten({pad, 0, 0}), Index{0}, interior.n[0]);
    return;
  }
  if (dim == 2) {
    for (Index i0 = 0; i0 < interior.n[0]; ++i0)
      fn(padded.flatten({i0 + pad, pad, 0}), interior.flatten({i0, 0, 0}), interior.n[1]);
    return;
  }
  for (Index i0 = 0; i0 < interior.n[0]; ++i0)
    for (Index i1 = 0; i1 < interior.n[1]; ++i1)
      fn(padded.flatten({i0 + pad, i1 + pad, pad}), interior.flatten({i0, i1, 0}), interior.n[2]);
}

// Rows of one leading slab (for disjoint-write parallel loops). For dim == 1
// there is a single slab 0 holding the whole line.
template <typename Fn>
static void slab_rows(const Lattice& interior, const Lattice& padded, int dim, Index pad,
                      Index i0, Fn&& fn) {
  if (dim == 1) {
    fn(padded.flatten({pad, 0, 0}), Index{0}, interior.n[0]);
    return;
  }
  if (dim == 2) {
    fn(padded.flatten({i0 + pad, pad, 0}), interior.flatten({i0, 0, 0}), interior.n[1]);
    return;
  }
  for (Index i1 = 0; i1 < interior.n[1]; ++i1)
    fn(padded.flatten({i0 + pad, i1 + pad, pad}), interior.flatten({i0, i1, 0}), interior.n[2]);
}

double NonlocalOperator::energy(const std::vector<double>& w) const {
  pad_into(w, scratch_);
  const std::vector<double>& wp = scratch_;
  std::vector<double> partial(offsets_.size(), 0.0);
  parallel_blocks(static_cast<Index>(offsets_.size()), [&](Index oi) {
    auto s = static_cast<std::size_t>(oi);
    Index delta = padded_.linear_offset(offsets_[s]);
    double acc = 0.0;
    interior_rows(interior_, padded_, dim_, pad_, [&](Index base, Index, Index len) {
      if (p_ == 2.0) {
        acc += kernels::active_backend()
                   .row_sq(wp.data() + base, wp.data() + base + delta, maskP_.data() + base,
                           maskP_.data() + base + delta, static_cast<std::size_t>(len), g_[s])
                   .sum;
      } else {
        acc += kernels::row_pow(wp.data() + base, wp.data() + base + delta, maskP_.data() + base,
                                maskP_.data() + base + delta, static_cast<std::size_t>(len), g_[s],
                                p_)
                   .sum;
      }
    });
    partial[s] = acc * a_[s];
  });
  double total = 0.0;
  for (double x : partial) total += x;
  return total * w0_;
}

void NonlocalOperator::gradient(const std::vector<double>& w, std::vector<double>& grad) const {
  pad_into(w, scratch_);
  const std::vector<double>& wp = scratch_;
  grad.assign(static_cast<std::size_t>(interior_.size()), 0.0);
  Index nslabs = dim_ == 1 ? 1 : interior_.n[0];
  // Offsets run sequentially (they all write `grad`); slabs write disjoint
  // rows, so each node accumulates in fixed offset order for any thread count.
  for (std::size_t s = 0; s < offsets_.size(); ++s) {
    Index delta = padded_.linear_offset(offsets_[s]);
    double c = -2.0 * p_ * a_[s] * w0_;
    double g = g_[s];
    parallel_blocks(nslabs, [&](Index i0) {
      slab_rows(interior_, padded_, dim_, pad_, i0, [&](Index base, Index out_base, Index len) {
        if (p_ == 2.0) {
          kernels::active_backend().row_axpy(grad.data() + out_base, wp.data() + base,
                                             wp.data() + base + delta, maskP_.data() + base,
                                             maskP_.data() + base + delta,
                                             static_cast<std::size_t>(len), c, g);
        } else {
          kernels::row_axpy_pow(grad.data() + out_base, wp.data() + base, wp.data() + base + delta,
                                maskP_.data() + base, maskP_.data() + base + delta,
                                static_cast<std::size_t>(len), c, g, p_, pow_delta_);
        }
      });
    });
  }
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= free_[i];
}

void NonlocalOperator::apply_hessian(const std::vector<double>& v, std::vector<double>& out) const {
  if (p_ != 2.0) throw SolverError("hessian apply is only defined for p = 2");
  pad_into(v, scratch_);
  const std::vector<double>& vp = scratch_;
  out.assign(static_cast<std::size_t>(interior_.size()), 0.0);
  Index nslabs = dim_ == 1 ? 1 : interior_.n[0];
  for (std::size_t s = 0; s < offsets_.size(); ++s) {
    Index delta = padded_.linear_offset(offsets_[s]);
    double c = -4.0 * a_[s] * w0_;
    parallel_blocks(nslabs, [&](Index i0) {
      slab_rows(interior_, padded_, dim_, pad_, i0, [&](Index base, Index out_base, Index len) {
        kernels::active_backend().row_axpy(out.data() + out_base, vp.data() + base,
                                           vp.data() + base + delta, maskP_.data() + base,
                                           maskP_.data() + base + delta,
                                           static_cast<std::size_t>(len), c, 0.0);
      });
    });
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= free_[i];
}

std::vector<std::int32_t> NonlocalOperator::free_components() const {
  std::vector<std::int32_t> label(static_cast<std::size_t>(interior_.size()), -1);
  std::int32_t ncomp = 0;
  std::deque<Index> q;
  for (Index f0 = 0; f0 < interior_.size(); ++f0) {
    if (free_[static_cast<std::size_t>(f0)] == 0.0 ||
        maskE_[static_cast<std::size_t>(f0)] == 0.0 ||
        label[static_cast<std::size_t>(f0)] >= 0)
      continue;
    std::int32_t id = ncomp++;
    label[static_cast<std::size_t>(f0)] = id;
    q.push_back(f0);
    while (!q.empty()) {
      Index f = q.front();
      q.pop_front();
      IVec c = interior_.unflatten(f);
      for (const auto& o : offsets_) {
        IVec nb = c;
        bool ok = true;
        for (int a = 0; a < dim_; ++a) {
          nb[a] += o[a];
          if (periodic_) {
            nb[a] %= interior_.n[a];
            if (nb[a] < 0) nb[a] += interior_.n[a];
          } else if (nb[a] < 0 || nb[a] >= interior_.n[a]) {
            ok = false;
          }
        }
        if (!ok) continue;
        Index g = interior_.flatten(nb);
        if (free_[static_cast<std::size_t>(g)] == 0.0 ||
            maskE_[static_cast<std::size_t>(g)] == 0.0)
          continue;
        if (label[static_cast<std::size_t>(g)] < 0) {
          label[static_cast<std::size_t>(g)] = id;
          q.push_back(g);
        }
      }
    }
  }
  return label;
}

void mean_zero_per_component(const NonlocalOperator& op, std::vector<double>& w) {
  std::vector<std::int32_t> label = op.free_components();
  std::int32_t ncomp = 0;
  for (auto l : label) ncomp = std::max(ncomp, l + 1);
  if (ncomp == 0) return;
  std::vector<double> sum(static_cast<std::size_t>(ncomp), 0.0);
  std::vector<Index> cnt(static_cast<std::size_t>(ncomp), 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (label[i] < 0) continue;
    sum[static_cast<std::size_t>(label[i])] += w[i];
    ++cnt[static_cast<std::size_t>(label[i])];
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (label[i] < 0) continue;
    auto c = static_cast<std::size_t>(label[i]);
    w[i] -= sum[c] / static_cast<double>(cnt[c]);
  }
}

namespace {

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

SolveReport solve_quadratic_cg(const NonlocalOperator& op, double rel_tol) {
  Index n = op.dof();
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  std::vector<double> b;
  op.gradient(w, b);  // grad(0)
  for (double& x : b) x = -x;

  double bnorm = std::sqrt(deterministic_dot(b.data(), b.data(), n));
  SolveReport rep;
  if (bnorm == 0.0) {
    rep.w = std::move(w);
    rep.value = op.energy(rep.w);
    rep.grad_sup = 0.0;
    rep.iterations = 0;
    return rep;
  }

  std::vector<double> r = b, pdir = b, q;
  double rs = deterministic_dot(r.data(), r.data(), n);
  long max_it = 10 * static_cast<long>(n);
  long it = 0;
  while (it < max_it) {
    ++it;
    op.apply_hessian(pdir, q);
    double pq = deterministic_dot(pdir.data(), q.data(), n);
    if (pq <= 0.0) throw SolverError("conjugate gradients hit a non-positive curvature direction");
    double alpha = rs / pq;
    for (Index i = 0; i < n; ++i) {
      w[static_cast<std::size_t>(i)] += alpha * pdir[static_cast<std::size_t>(i)];
      r[static_cast<std::size_t>(i)] -= alpha * q[static_cast<std::size_t>(i)];
    }
    double rs_new = deterministic_dot(r.data(), r.data(), n);
    if (std::sqrt(rs_new) <= rel_tol * bnorm) {
      rs = rs_new;
      break;
    }
    double beta = rs_new / rs;
    rs = rs_new;
    for (Index i = 0; i < n; ++i)
      pdir[static_cast<std::size_t>(i)] =
          r[static_cast<std::size_t>(i)] + beta * pdir[static_cast<std::size_t>(i)];
  }
  if (it >= max_it && std::sqrt(rs) > rel_tol * bnorm)
    throw SolverError("conjugate gradients did not converge within 10x unknowns iterations");

  mean_zero_per_component(op, w);
  std::vector<double> grad;
  op.gradient(w, grad);
  rep.w = std::move(w);
  rep.value = op.energy(rep.w);
  rep.grad_sup = sup_norm(grad);
  rep.iterations = static_cast<int>(it);
  return rep;
}

SolveReport solve_descent(const NonlocalOperator& op, double grad_tol, long max_iterations) {
  Index n = op.dof();
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  std::vector<double> grad, wprev, gprev, trial;
  op.gradient(w, grad);
  double f = op.energy(w);
  double step = 1.0;
  long it = 0;
  int stall = 0;
  SolveReport rep;
  rep.smoothed = op.pow_delta() > 0.0;
  while (it < max_iterations) {
    double gsup = sup_norm(grad);
    if (gsup <= grad_tol) break;
    double gg = deterministic_dot(grad.data(), grad.data(), n);

    // Safeguarded Barzilai-Borwein initial step.
    if (!wprev.empty()) {
      double sy = 0.0, ss = 0.0;
      for (Index i = 0; i < n; ++i) {
        double ds = w[static_cast<std::size_t>(i)] - wprev[static_cast<std::size_t>(i)];
        double dy = grad[static_cast<std::size_t>(i)] - gprev[static_cast<std::size_t>(i)];
        sy += ds * dy;
        ss += ds * ds;
      }
      if (sy > 0.0 && ss > 0.0) step = std::clamp(ss / sy, 1e-12, 1e12);
    }

    // Backtracking Armijo line search.
    double fnew = f;
    trial.resize(static_cast<std::size_t>(n));
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (Index i = 0; i < n; ++i)
        trial[static_cast<std::size_t>(i)] =
            w[static_cast<std::size_t>(i)] - step * grad[static_cast<std::size_t>(i)];
      fnew = op.energy(trial);
      if (fnew <= f - 1e-4 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // vanishing step: the gradient is numerically flat

    wprev = w;
    gprev = grad;
    w.swap(trial);
    op.gradient(w, grad);
    ++it;
    double decrease = (f - fnew) / std::max(1.0, std::abs(f));
    f = fnew;
    if (decrease < 1e-12) {
      if (++stall >= 10) break;
    } else {
      stall = 0;
    }
  }
  if (it >= max_iterations) throw SolverError("gradient descent exceeded the iteration cap");

  mean_zero_per_component(op, w);
  op.gradient(w, grad);
  rep.w = std::move(w);
  rep.value = op.energy(rep.w);
  rep.grad_sup = sup_norm(grad);
  rep.iterations = static_cast<int>(it);
  return rep;
}

}  // namespace nlhom
