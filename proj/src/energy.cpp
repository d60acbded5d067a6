#include "nlhom/energy.hpp"

#include <cmath>

#include "nlhom/pair_kernels.hpp"
#include "nlhom/parallel.hpp"

namespace nlhom {

namespace {

// Masked values with unmasked entries zeroed; keeps garbage (even NaN) at
// unmasked nodes out of the branchless pair kernels.
std::vector<double> clean_values(const GridField& u) {
  std::vector<double> v(u.values.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = u.mask[i] != 0.0 ? u.values[i] : 0.0;
  return v;
}

// Sum over the clipped box of one offset, rows along the fastest real axis.
kernels::RowSum offset_sum_p2(const Lattice& lat, int dim, const std::vector<double>& v,
                              const std::vector<double>& mA, const std::vector<double>& mB,
                              const IVec& o, double g) {
  ClippedBox b = clip_for_offset(lat, o);
  kernels::RowSum total;
  if (b.empty) return total;
  Index delta = lat.linear_offset(o);
  const auto& backend = kernels::active_backend();
  for_rows(lat, dim, b, [&](Index base, Index len) {
    kernels::RowSum r =
        backend.row_sq(v.data() + base, v.data() + base + delta, mA.data() + base,
                       mB.data() + base + delta, static_cast<std::size_t>(len), g);
    total.sum += r.sum;
    total.count += r.count;
  });
  return total;
}

kernels::RowSum offset_sum_pow(const Lattice& lat, int dim, const std::vector<double>& v,
                               const std::vector<double>& mA, const std::vector<double>& mB,
                               const IVec& o, double g, double p) {
  ClippedBox b = clip_for_offset(lat, o);
  kernels::RowSum total;
  if (b.empty) return total;
  Index delta = lat.linear_offset(o);
  for_rows(lat, dim, b, [&](Index base, Index len) {
    kernels::RowSum r =
        kernels::row_pow(v.data() + base, v.data() + base + delta, mA.data() + base,
                         mB.data() + base + delta, static_cast<std::size_t>(len), g, p);
    total.sum += r.sum;
    total.count += r.count;
  });
  return total;
}

// Weighted pair sum over all stencil offsets; per-offset partials are
// combined in offset order, so the result is independent of the schedule.
kernels::RowSum stencil_sum(const Lattice& lat, int dim, const Stencil& st,
                            const std::vector<double>& v, const std::vector<double>& mA,
                            const std::vector<double>& mB, double p) {
  std::vector<kernels::RowSum> partial(st.offsets.size());
  parallel_blocks(static_cast<Index>(st.offsets.size()), [&](Index oi) {
    auto s = static_cast<std::size_t>(oi);
    kernels::RowSum r = p == 2.0 ? offset_sum_p2(lat, dim, v, mA, mB, st.offsets[s], 0.0)
                                 : offset_sum_pow(lat, dim, v, mA, mB, st.offsets[s], 0.0, p);
    r.sum *= st.weight[s];
    partial[s] = r;
  });
  kernels::RowSum total;
  for (const auto& r : partial) {
    total.sum += r.sum;
    total.count += r.count;
  }
  return total;
}

std::vector<double> region_mask(const GridField& u, const BoxRegion& A) {
  Lattice lat = u.lattice();
  std::vector<double> m(u.mask.size());
  for (Index i = 0; i < lat.size(); ++i) {
    Vec x = u.region.node_center(lat.unflatten(i));
    m[static_cast<std::size_t>(i)] = (u.mask[static_cast<std::size_t>(i)] != 0.0 && A.contains(x)) ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace

Stencil build_stencil(int dim, double h, double eps, const Kernel& kernel) {
  double reach = eps * kernel.support_radius();
  Index m = static_cast<Index>(std::floor(reach / h * (1.0 + 1e-12)));
  Stencil st;
  if (m < 1)
    throw GeometryError("degenerate stencil: eps * R0 is below one grid spacing");
  IVec o{};
  Index m1 = dim > 1 ? m : 0, m2 = dim > 2 ? m : 0;
  for (o[0] = -m; o[0] <= m; ++o[0])
    for (o[1] = -m1; o[1] <= m1; ++o[1])
      for (o[2] = -m2; o[2] <= m2; ++o[2]) {
        if (o[0] == 0 && o[1] == 0 && o[2] == 0) continue;
        double r = std::sqrt(static_cast<double>(o[0] * o[0] + o[1] * o[1] + o[2] * o[2])) * h;
        if (r > reach * (1.0 + 1e-12)) continue;
        Vec xi{0, 0, 0};
        for (int a = 0; a < dim; ++a) xi[a] = static_cast<double>(o[a]) * h / eps;
        st.offsets.push_back(o);
        st.weight.push_back(kernel.eval(xi));
        st.xi.push_back(xi);
      }
  return st;
}

EnergyBreakdown nonlocal_energy(const GridField& u, const EnergySpec& spec, bool want_per_cell) {
  if (u.masked_count() == 0) throw GeometryError("nonlocal_energy: field mask is empty");
  Lattice lat = u.lattice();
  int d = u.region.dim;
  double h = u.region.spacing;
  Stencil st = build_stencil(d, h, spec.eps, spec.kernel);
  std::vector<double> v = clean_values(u);
  double scale = std::pow(spec.eps, -(d + spec.p)) * std::pow(h, 2 * d);

  EnergyBreakdown out;
  if (!want_per_cell) {
    kernels::RowSum r = stencil_sum(lat, d, st, v, u.mask, u.mask, spec.p);
    out.total = r.sum * scale;
    out.pair_count = static_cast<Index>(std::llround(r.count));
    return out;
  }

  // Per-cell partials: each ordered pair (x, y) is charged to x. Sequential
  // over offsets because all offsets write the same accumulator grid.
  std::vector<double> per(static_cast<std::size_t>(lat.size()), 0.0);
  double count = 0.0;
  for (std::size_t s = 0; s < st.offsets.size(); ++s) {
    ClippedBox b = clip_for_offset(lat, st.offsets[s]);
    if (b.empty) continue;
    Index delta = lat.linear_offset(st.offsets[s]);
    for (Index i0 = b.lo[0]; i0 < b.hi[0]; ++i0)
      for (Index i1 = b.lo[1]; i1 < b.hi[1]; ++i1)
        for (Index i2 = b.lo[2]; i2 < b.hi[2]; ++i2) {
          Index i = lat.flatten({i0, i1, i2});
          double w = u.mask[static_cast<std::size_t>(i)] * u.mask[static_cast<std::size_t>(i + delta)];
          if (w == 0.0) continue;
          double diff = v[static_cast<std::size_t>(i + delta)] - v[static_cast<std::size_t>(i)];
          double term = spec.p == 2.0 ? diff * diff : std::pow(std::abs(diff), spec.p);
          per[static_cast<std::size_t>(i)] += st.weight[s] * term * scale;
          count += w;
        }
  }
  double tot = 0.0;
  for (double x : per) tot += x;
  out.total = tot;
  out.pair_count = static_cast<Index>(std::llround(count));
  out.per_cell = std::move(per);
  return out;
}

EnergyBreakdown general_energy(const GridField& u, const EnergySpec& spec) {
  if (!spec.integrand) throw ConfigError("general_energy requires an integrand callback");
  if (u.masked_count() == 0) throw GeometryError("general_energy: field mask is empty");
  Lattice lat = u.lattice();
  int d = u.region.dim;
  double h = u.region.spacing;
  Stencil st = build_stencil(d, h, spec.eps, spec.kernel);
  std::vector<double> v = clean_values(u);
  double xi_weight = std::pow(h / spec.eps, d);
  double x_weight = std::pow(h, d);

  std::vector<double> partial(st.offsets.size(), 0.0);
  std::vector<double> counts(st.offsets.size(), 0.0);
  parallel_blocks(static_cast<Index>(st.offsets.size()), [&](Index oi) {
    auto s = static_cast<std::size_t>(oi);
    ClippedBox b = clip_for_offset(lat, st.offsets[s]);
    if (b.empty) return;
    Index delta = lat.linear_offset(st.offsets[s]);
    double acc = 0.0, cnt = 0.0;
    for (Index i0 = b.lo[0]; i0 < b.hi[0]; ++i0)
      for (Index i1 = b.lo[1]; i1 < b.hi[1]; ++i1)
        for (Index i2 = b.lo[2]; i2 < b.hi[2]; ++i2) {
          Index i = lat.flatten({i0, i1, i2});
          double w = u.mask[static_cast<std::size_t>(i)] * u.mask[static_cast<std::size_t>(i + delta)];
          if (w == 0.0) continue;
          Vec x = u.region.node_center({i0, i1, i2});
          Vec xs{0, 0, 0};
          for (int a = 0; a < d; ++a) xs[a] = x[a] / spec.eps;
          double z = (v[static_cast<std::size_t>(i + delta)] - v[static_cast<std::size_t>(i)]) / spec.eps;
          acc += spec.integrand(xs, st.xi[s], z);
          cnt += 1.0;
        }
    partial[s] = acc;
    counts[s] = cnt;
  });
  EnergyBreakdown out;
  double total = 0.0, count = 0.0;
  for (std::size_t s = 0; s < partial.size(); ++s) {
    total += partial[s];
    count += counts[s];
  }
  out.total = total * xi_weight * x_weight;
  out.pair_count = static_cast<Index>(std::llround(count));
  return out;
}

double localized_energy(const GridField& u, const EnergySpec& spec, const BoxRegion& A,
                        bool* empty_warning) {
  std::vector<double> m = region_mask(u, A);
  bool empty = true;
  for (double x : m)
    if (x != 0.0) {
      empty = false;
      break;
    }
  if (empty_warning) *empty_warning = empty;
  if (empty) return 0.0;
  Lattice lat = u.lattice();
  Stencil st = build_stencil(u.region.dim, u.region.spacing, spec.eps, spec.kernel);
  std::vector<double> v = clean_values(u);
  kernels::RowSum r = stencil_sum(lat, u.region.dim, st, v, m, m, spec.p);
  return r.sum * std::pow(spec.eps, -(u.region.dim + spec.p)) * std::pow(u.region.spacing, 2 * u.region.dim);
}

double mean_value(const GridField& u, const BoxRegion& A) {
  Lattice lat = u.lattice();
  double sum = 0.0;
  Index count = 0;
  for (Index i = 0; i < lat.size(); ++i) {
    if (u.mask[static_cast<std::size_t>(i)] == 0.0) continue;
    if (!A.contains(u.region.node_center(lat.unflatten(i)))) continue;
    sum += u.values[static_cast<std::size_t>(i)];
    ++count;
  }
  if (count == 0) throw GeometryError("mean_value: no masked node lies in the region");
  return sum / static_cast<double>(count);
}

std::pair<double, double> poincare_defect(const GridField& u, const BoxRegion& A, double p) {
  Lattice lat = u.lattice();
  std::vector<double> vals;
  for (Index i = 0; i < lat.size(); ++i) {
    if (u.mask[static_cast<std::size_t>(i)] == 0.0) continue;
    if (!A.contains(u.region.node_center(lat.unflatten(i)))) continue;
    vals.push_back(u.values[static_cast<std::size_t>(i)]);
  }
  if (vals.empty()) throw GeometryError("poincare_defect: no masked node lies in the region");
  double w = std::pow(u.region.spacing, u.region.dim);
  double measure = static_cast<double>(vals.size()) * w;
  double mean = 0.0;
  for (double x : vals) mean += x;
  mean /= static_cast<double>(vals.size());
  double lhs = 0.0;
  for (double x : vals) lhs += std::pow(std::abs(mean - x), p);
  lhs *= w;
  double rhs = 0.0;
  for (double x : vals)
    for (double y : vals) rhs += std::pow(std::abs(x - y), p);
  rhs *= w * w / measure;
  return {lhs, rhs};
}

double compactness_diagnostic(const GridField& u, const EnergySpec& spec, double k, double R) {
  BoxRegion inner = retract(u.region, spec.eps * k);  // throws when emptied
  std::vector<double> mA = region_mask(u, inner);
  Lattice lat = u.lattice();
  int d = u.region.dim;
  double h = u.region.spacing;
  Kernel ball = Kernel::ball_indicator(d, R);
  Stencil st = build_stencil(d, h, spec.eps, ball);  // offsets with |xi| <= R
  std::vector<double> v = clean_values(u);

  std::vector<double> partial(st.offsets.size(), 0.0);
  parallel_blocks(static_cast<Index>(st.offsets.size()), [&](Index oi) {
    auto s = static_cast<std::size_t>(oi);
    kernels::RowSum r = spec.p == 2.0 ? offset_sum_p2(lat, d, v, mA, u.mask, st.offsets[s], 0.0)
                                      : offset_sum_pow(lat, d, v, mA, u.mask, st.offsets[s], 0.0, spec.p);
    partial[s] = r.sum;
  });
  double total = 0.0;
  for (double x : partial) total += x;
  // |.|^p / eps^p, d xi = (h/eps)^d, dx = h^d.
  return total * std::pow(spec.eps, -spec.p) * std::pow(h / spec.eps, d) * std::pow(h, d);
}

}  // namespace nlhom
