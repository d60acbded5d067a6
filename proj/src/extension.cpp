#include "nlhom/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "nlhom/pair_kernels.hpp"
#include "nlhom/parallel.hpp"

namespace nlhom {

namespace {

constexpr double kAlignTol = 1e-9;

struct CollarPatch {
  std::size_t hole = 0;
  IVec shift{0, 0, 0};
  int facet = 0;  // boxes: axis * 2 + side; balls: -1
  bool operator<(const CollarPatch& o) const {
    if (hole != o.hole) return hole < o.hole;
    if (shift != o.shift) return shift < o.shift;
    return facet < o.facet;
  }
};

// Mirror of a hole-interior point across one facet (boxes) or radially (balls).
bool mirror_point(const HoleSpec& h, int dim, const Vec& local, int facet, Vec* out) {
  if (h.shape == HoleSpec::Shape::box) {
    int axis = facet / 2;
    bool low = (facet % 2) == 0;
    Vec z = local;
    z[axis] = low ? 2.0 * h.lo[axis] - local[axis] : 2.0 * h.hi[axis] - local[axis];
    *out = z;
    return true;
  }
  double s = 0.0;
  for (int a = 0; a < dim; ++a) {
    double d = local[a] - h.center[a];
    s += d * d;
  }
  s = std::sqrt(s);
  if (s <= 1e-14) return false;  // hole center has no radial direction
  double target = 2.0 * h.radius - s;
  Vec z{0, 0, 0};
  for (int a = 0; a < dim; ++a)
    z[a] = h.center[a] + (local[a] - h.center[a]) * (target / s);
  *out = z;
  return true;
}

// Facets of a box hole ordered by penetration depth (nearest first).
std::vector<std::pair<double, int>> ordered_facets(const HoleSpec& h, int dim, const Vec& local) {
  std::vector<std::pair<double, int>> f;
  for (int a = 0; a < dim; ++a) {
    f.push_back({local[a] - h.lo[a], 2 * a});
    f.push_back({h.hi[a] - local[a], 2 * a + 1});
  }
  std::sort(f.begin(), f.end());
  return f;
}

// Nearest component cell (within the 3Q window) to a point; searches
// Chebyshev rings outward and keeps the Euclidean-nearest candidate.
Index snap_to_component(const PeriodicDomain& dom, const ComponentMask& comp, const Lattice& w3,
                        const Vec& z, Index max_ring) {
  int d = dom.dim();
  int n = dom.resolution;
  IVec c0{0, 0, 0};
  for (int a = 0; a < d; ++a) {
    c0[a] = static_cast<Index>(std::floor(z[a] * n));
    c0[a] = std::clamp(c0[a], Index{0}, w3.n[a] - 1);
  }
  Index best = -1;
  double best_d2 = 0.0;
  for (Index ring = 0; ring <= max_ring; ++ring) {
    IVec o{};
    Index r1 = d > 1 ? ring : 0, r2 = d > 2 ? ring : 0;
    for (o[0] = -ring; o[0] <= ring; ++o[0])
      for (o[1] = -r1; o[1] <= r1; ++o[1])
        for (o[2] = -r2; o[2] <= r2; ++o[2]) {
          Index cheb = std::max({std::abs(o[0]), std::abs(o[1]), std::abs(o[2])});
          if (cheb != ring) continue;
          IVec c{c0[0] + o[0], c0[1] + o[1], c0[2] + o[2]};
          for (int a = d; a < 3; ++a) c[a] = 0;
          if (!w3.in_range(c)) continue;
          if (!comp.cell(d, c)) continue;
          double d2 = 0.0;
          for (int a = 0; a < d; ++a) {
            double cc = (static_cast<double>(c[a]) + 0.5) / n;
            d2 += (cc - z[a]) * (cc - z[a]);
          }
          if (best < 0 || d2 < best_d2) {
            best = w3.flatten(c);
            best_d2 = d2;
          }
        }
    // One extra ring after the first hit covers Euclidean-closer cells in the
    // next Chebyshev shell.
    if (best >= 0 && ring > 0) {
      if (ring > static_cast<Index>(std::ceil(std::sqrt(best_d2) * n)) ) break;
    }
  }
  return best;
}

std::vector<double> box_membership_mask(const GridField& u, const BoxRegion& A) {
  Lattice lat = u.lattice();
  std::vector<double> m(u.mask.size(), 0.0);
  for (Index i = 0; i < lat.size(); ++i) {
    if (A.contains(u.region.node_center(lat.unflatten(i))))
      m[static_cast<std::size_t>(i)] = u.mask[static_cast<std::size_t>(i)];
  }
  return m;
}

// Pair sum of |u(x)-u(y)|^p over offsets |o| h <= radius with endpoint masks.
kernels::RowSum range_pair_sum(const GridField& u, const std::vector<double>& mA,
                               const std::vector<double>& mB, double radius, double p) {
  Lattice lat = u.lattice();
  int d = u.region.dim;
  double h = u.region.spacing;
  Index m = static_cast<Index>(std::floor(radius / h * (1.0 + 1e-12)));
  std::vector<double> v(u.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mA[i] != 0.0 || mB[i] != 0.0 ? u.values[i] : 0.0;

  std::vector<IVec> offsets;
  IVec o{};
  Index m1 = d > 1 ? m : 0, m2 = d > 2 ? m : 0;
  for (o[0] = -m; o[0] <= m; ++o[0])
    for (o[1] = -m1; o[1] <= m1; ++o[1])
      for (o[2] = -m2; o[2] <= m2; ++o[2]) {
        if (o[0] == 0 && o[1] == 0 && o[2] == 0) continue;
        double r = std::sqrt(static_cast<double>(o[0] * o[0] + o[1] * o[1] + o[2] * o[2])) * h;
        if (r <= radius * (1.0 + 1e-12)) offsets.push_back(o);
      }

  std::vector<kernels::RowSum> partial(offsets.size());
  parallel_blocks(static_cast<Index>(offsets.size()), [&](Index oi) {
    auto s = static_cast<std::size_t>(oi);
    ClippedBox b = clip_for_offset(lat, offsets[s]);
    kernels::RowSum acc;
    if (!b.empty) {
      Index delta = lat.linear_offset(offsets[s]);
      for_rows(lat, d, b, [&](Index base, Index len) {
        kernels::RowSum r =
            p == 2.0
                ? kernels::active_backend().row_sq(v.data() + base, v.data() + base + delta,
                                                   mA.data() + base, mB.data() + base + delta,
                                                   static_cast<std::size_t>(len), 0.0)
                : kernels::row_pow(v.data() + base, v.data() + base + delta, mA.data() + base,
                                   mB.data() + base + delta, static_cast<std::size_t>(len), 0.0,
                                   p);
        acc.sum += r.sum;
        acc.count += r.count;
      });
    }
    partial[s] = acc;
  });
  kernels::RowSum total;
  for (const auto& r : partial) {
    total.sum += r.sum;
    total.count += r.count;
  }
  return total;
}

double masked_lp(const GridField& u, const std::vector<double>& m, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    if (m[i] == 0.0) continue;
    s += p == 2.0 ? u.values[i] * u.values[i] : std::pow(std::abs(u.values[i]), p);
  }
  return s * std::pow(u.region.spacing, u.region.dim);
}

double masked_measure(const GridField& u, const std::vector<double>& m) {
  double c = 0.0;
  for (double x : m) c += x;
  return c * std::pow(u.region.spacing, u.region.dim);
}

}  // namespace

double default_collar_width(const PeriodicDomain& dom) {
  if (dom.spec.holes.empty()) return 0.0;
  double gap = dom.spec.min_hole_gap();
  if (!std::isfinite(gap)) return 0.45;
  return std::min(0.5 * gap, 0.45);
}

BoxRegion component_window_region(const PeriodicDomain& dom) {
  int d = dom.dim();
  return BoxRegion(d, Vec{0, 0, 0}, Vec{3, 3, 3}, 1.0 / dom.resolution);
}

GridField component_window_field(const PeriodicDomain& dom, const ComponentMask& comp) {
  GridField f(component_window_region(dom));
  Lattice lat = f.lattice();
  for (Index i = 0; i < lat.size(); ++i)
    f.mask[static_cast<std::size_t>(i)] = comp.cell(dom.dim(), lat.unflatten(i)) ? 1.0 : 0.0;
  return f;
}

ExtensionPlan build_plan(const PeriodicDomain& dom, const ComponentMask& comp, double t) {
  int d = dom.dim();
  int n = dom.resolution;
  ExtensionPlan plan;
  plan.dom = dom;
  plan.comp = comp;
  plan.t = t;
  plan.R_est = dom.spec.holes.empty() ? 0.25 : 0.5 * t;
  if (!dom.spec.holes.empty()) {
    if (t <= 0.0) throw GeometryError("collar width must be positive for perforated domains");
    double gap = dom.spec.min_hole_gap();
    if (std::isfinite(gap) && t > 0.5 * gap + 1e-12)
      throw GeometryError("collar width exceeds half the minimum hole gap; reflections would collide");
  }

  Lattice w2 = plan.window2(d);
  Lattice w3 = plan.window3(d);
  plan.branch.assign(static_cast<std::size_t>(w2.size()), ExtensionPlan::far);
  plan.phi.assign(static_cast<std::size_t>(w2.size()), 0.0);
  plan.reflect.assign(static_cast<std::size_t>(w2.size()), -1);

  std::vector<std::pair<CollarPatch, Index>> patch_cells;  // diagnostics
  std::vector<std::string> failures;
  Index max_ring = static_cast<Index>(std::ceil(t * n)) + 2;

  for (Index f = 0; f < w2.size(); ++f) {
    IVec c = w2.unflatten(f);
    if (comp.cell(d, c)) {
      plan.branch[static_cast<std::size_t>(f)] = ExtensionPlan::component;
      plan.phi[static_cast<std::size_t>(f)] = 1.0;
      continue;
    }
    Vec y{0, 0, 0};
    for (int a = 0; a < d; ++a) y[a] = (static_cast<double>(c[a]) + 0.5) / n;
    if (dom.contains_point(y)) {
      // E raster cell outside the component inside 2Q would contradict the
      // covering property certified by component_selection.
      std::ostringstream os;
      os << "2Q cell at (" << y[0] << ", " << y[1] << ") lies in E but not in the component";
      throw GeometryError(os.str());
    }
    Vec shift{0, 0, 0};
    auto hole = dom.spec.containing_hole(y, &shift);
    if (!hole) {
      // Raster says not-E but no hole contains the center: only possible at
      // exact hole boundaries; treat as far region.
      continue;
    }
    const HoleSpec& hs = dom.spec.holes[*hole];
    Vec local{0, 0, 0};
    for (int a = 0; a < d; ++a) local[a] = y[a] - shift[a];
    double depth = DomainSpec::hole_boundary_depth(hs, local, d);
    if (depth >= t) continue;  // far region, phi = 0

    plan.branch[static_cast<std::size_t>(f)] = ExtensionPlan::collar;
    plan.phi[static_cast<std::size_t>(f)] = 1.0 - smoothstep5(depth / t);

    // Reflection: nearest facet first for boxes (ties fall through to the
    // next facet whose snapped image lands in C cap 3Q), radial for balls.
    Index target = -1;
    int used_facet = -1;
    if (hs.shape == HoleSpec::Shape::box) {
      for (const auto& [fd, facet] : ordered_facets(hs, d, local)) {
        Vec zl;
        if (!mirror_point(hs, d, local, facet, &zl)) continue;
        Vec z{0, 0, 0};
        for (int a = 0; a < d; ++a) z[a] = zl[a] + shift[a];
        Index tgt = snap_to_component(dom, comp, w3, z, max_ring);
        if (tgt >= 0) {
          target = tgt;
          used_facet = facet;
          break;
        }
      }
    } else {
      Vec zl;
      if (mirror_point(hs, d, local, 0, &zl)) {
        Vec z{0, 0, 0};
        for (int a = 0; a < d; ++a) z[a] = zl[a] + shift[a];
        target = snap_to_component(dom, comp, w3, z, max_ring);
        used_facet = -1;
      }
    }
    if (target < 0) {
      std::ostringstream os;
      os << "(" << y[0];
      for (int a = 1; a < d; ++a) os << ", " << y[a];
      os << ")";
      failures.push_back(os.str());
      continue;
    }
    plan.reflect[static_cast<std::size_t>(f)] = target;
    CollarPatch patch;
    patch.hole = *hole;
    for (int a = 0; a < d; ++a) patch.shift[a] = static_cast<Index>(std::llround(shift[a]));
    patch.facet = used_facet;
    patch_cells.push_back({patch, f});
  }

  if (!failures.empty()) {
    std::ostringstream os;
    os << "collar width t = " << t << " too large: reflected image escapes C cap 3Q at "
       << failures.size() << " node(s), first at " << failures.front();
    throw GeometryError(os.str());
  }

  // Bi-Lipschitz diagnostic on same-patch pairs separated enough that the
  // node snap cannot dominate the ratio.
  std::sort(patch_cells.begin(), patch_cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double h = 1.0 / n;
  double min_sep = 3.0 * h;
  Lattice w3l = plan.window3(d);
  auto center2 = [&](Index f) {
    IVec c = w2.unflatten(f);
    Vec x{0, 0, 0};
    for (int a = 0; a < d; ++a) x[a] = (static_cast<double>(c[a]) + 0.5) * h;
    return x;
  };
  auto center3 = [&](Index f) {
    IVec c = w3l.unflatten(f);
    Vec x{0, 0, 0};
    for (int a = 0; a < d; ++a) x[a] = (static_cast<double>(c[a]) + 0.5) * h;
    return x;
  };
  bool have_ratio = false;
  for (std::size_t i = 0; i < patch_cells.size(); ++i) {
    for (std::size_t j = i + 1; j < patch_cells.size(); ++j) {
      if (patch_cells[i].first < patch_cells[j].first ||
          patch_cells[j].first < patch_cells[i].first)
        break;  // sorted: different patch starts here
      Vec x1 = center2(patch_cells[i].second);
      Vec x2 = center2(patch_cells[j].second);
      Vec dxy{0, 0, 0};
      double dx = 0.0;
      for (int a = 0; a < d; ++a) {
        dxy[a] = x1[a] - x2[a];
        dx += dxy[a] * dxy[a];
      }
      dx = std::sqrt(dx);
      if (dx < min_sep || dx > 2.0 * t) continue;
      Vec z1 = center3(plan.reflect[static_cast<std::size_t>(patch_cells[i].second)]);
      Vec z2 = center3(plan.reflect[static_cast<std::size_t>(patch_cells[j].second)]);
      double dz = 0.0;
      for (int a = 0; a < d; ++a) dz += (z1[a] - z2[a]) * (z1[a] - z2[a]);
      dz = std::sqrt(dz);
      double ratio = dz / dx;
      if (!have_ratio) {
        plan.pair_ratio_min = plan.pair_ratio_max = ratio;
        have_ratio = true;
      } else {
        plan.pair_ratio_min = std::min(plan.pair_ratio_min, ratio);
        plan.pair_ratio_max = std::max(plan.pair_ratio_max, ratio);
      }
    }
  }
  return plan;
}

GridField local_extend(const ExtensionPlan& plan, const GridField& u) {
  int d = plan.dom.dim();
  int n = plan.dom.resolution;
  Lattice w3 = plan.window3(d);
  if (u.lattice().size() != w3.size())
    throw GeometryError("local_extend input must live on the 3Q window grid");
  if (u.masked_count() == 0) throw GeometryError("local_extend: empty component field");

  double mean = 0.0;
  Index cnt = 0;
  for (Index i = 0; i < w3.size(); ++i) {
    if (u.mask[static_cast<std::size_t>(i)] == 0.0) continue;
    mean += u.values[static_cast<std::size_t>(i)];
    ++cnt;
  }
  mean /= static_cast<double>(cnt);

  GridField out(BoxRegion(d, Vec{0, 0, 0}, Vec{2, 2, 2}, 1.0 / n));
  Lattice w2 = plan.window2(d);
  for (Index f = 0; f < w2.size(); ++f) {
    IVec c = w2.unflatten(f);
    auto s = static_cast<std::size_t>(f);
    double val = 0.0;
    switch (plan.branch[s]) {
      case ExtensionPlan::component:
        val = u.values[static_cast<std::size_t>(w3.flatten(c))];
        break;
      case ExtensionPlan::collar: {
        double uv = u.values[static_cast<std::size_t>(plan.reflect[s])];
        val = plan.phi[s] * uv + (1.0 - plan.phi[s]) * mean;
        break;
      }
      case ExtensionPlan::far:
        val = mean;
        break;
    }
    out.values[static_cast<std::size_t>(out.lattice().flatten(c))] = val;
  }
  return out;
}

LocalEstimates local_estimates(const ExtensionPlan& plan, const GridField& u, double p) {
  int d = plan.dom.dim();
  double h = 1.0 / plan.dom.resolution;
  GridField phiu = local_extend(plan, u);

  LocalEstimates est;
  std::vector<double> all2(phiu.mask.size(), 1.0);
  double num_lp = masked_lp(phiu, all2, p);
  double den_lp = masked_lp(u, u.mask, p);
  if (den_lp == 0.0) {
    est.lp_ratio = 0.0;
    est.lp_infinite = num_lp != 0.0;
  } else {
    est.lp_ratio = num_lp / den_lp;
  }

  double num_e = range_pair_sum(phiu, all2, all2, plan.R_est, p).sum * std::pow(h, 2 * d);
  // Denominator over all pairs of C cap 3Q. p = 2 has a closed form; other
  // exponents fall back to the quadratic pair loop.
  double den_e;
  if (p == 2.0) {
    double s1 = 0.0, s2 = 0.0;
    Index cnt = 0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      if (u.mask[i] == 0.0) continue;
      s1 += u.values[i];
      s2 += u.values[i] * u.values[i];
      ++cnt;
    }
    den_e = (2.0 * static_cast<double>(cnt) * s2 - 2.0 * s1 * s1) * std::pow(h, 2 * d);
  } else {
    std::vector<double> vals;
    for (std::size_t i = 0; i < u.values.size(); ++i)
      if (u.mask[i] != 0.0) vals.push_back(u.values[i]);
    double s = 0.0;
    for (double a : vals)
      for (double b : vals) s += std::pow(std::abs(a - b), p);
    den_e = s * std::pow(h, 2 * d);
  }
  if (den_e == 0.0) {
    est.energy_ratio = 0.0;
    est.energy_infinite = num_e > 1e-30;
  } else {
    est.energy_ratio = num_e / den_e;
  }
  return est;
}

GridField glue(const ExtensionPlan& plan, const GridField& u, const BoxRegion& omega_prime) {
  int d = plan.dom.dim();
  int n = plan.dom.resolution;
  double h = 1.0 / n;
  if (std::abs(u.region.spacing - h) > kAlignTol * h)
    throw GeometryError("glue input grid spacing must be 1/n at the unit scale");
  for (int a = 0; a < d; ++a) {
    double cells = u.region.origin[a] * n;
    if (std::abs(cells - std::round(cells)) > 1e-6)
      throw GeometryError("glue input grid must be aligned to the unit-cell raster");
  }

  // Margin check: dist(omega_prime, boundary of the field box) >= C-tilde.
  double margin = std::numeric_limits<double>::infinity();
  for (int a = 0; a < d; ++a) {
    margin = std::min(margin, omega_prime.origin[a] - u.region.origin[a]);
    margin = std::min(margin, (u.region.origin[a] + u.region.extent[a]) -
                                  (omega_prime.origin[a] + omega_prime.extent[a]));
  }
  if (margin < plan.c_tilde() * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "glue margin " << margin << " is below the required C~ = " << plan.c_tilde();
    throw GeometryError(os.str());
  }

  Lattice lat = u.lattice();
  // Lattice window of nodes inside omega_prime.
  IVec lo{0, 0, 0}, cnt{1, 1, 1};
  for (int a = 0; a < d; ++a) {
    double first = (omega_prime.origin[a] - u.region.origin[a]) / h - 0.5;
    double last = (omega_prime.origin[a] + omega_prime.extent[a] - u.region.origin[a]) / h - 0.5;
    lo[a] = static_cast<Index>(std::ceil(first - 1e-9));
    Index hi = static_cast<Index>(std::floor(last + 1e-9));
    lo[a] = std::max(lo[a], Index{0});
    hi = std::min(hi, lat.n[a] - 1);
    if (hi < lo[a]) throw GeometryError("glue target region contains no grid node");
    cnt[a] = hi - lo[a] + 1;
  }
  Vec out_origin{0, 0, 0}, out_extent{1, 1, 1};
  for (int a = 0; a < d; ++a) {
    out_origin[a] = u.region.origin[a] + static_cast<double>(lo[a]) * h;
    out_extent[a] = static_cast<double>(cnt[a]) * h;
  }
  GridField out(BoxRegion(d, out_origin, out_extent, h));

  // Global cell index of u's node (i) along axis a: base[a] + i.
  IVec base{0, 0, 0};
  for (int a = 0; a < d; ++a)
    base[a] = static_cast<Index>(std::llround(u.region.origin[a] * n));

  Lattice w2 = plan.window2(d);
  Lattice w3 = plan.window3(d);

  // Component means per translate alpha, built on demand.
  std::map<IVec, double> mean_cache;
  std::vector<Index> comp_cells;  // flat indices of C cap 3Q in the 3Q window
  for (Index f = 0; f < w3.size(); ++f)
    if (plan.comp.cell(d, w3.unflatten(f))) comp_cells.push_back(f);
  auto component_mean = [&](const IVec& alpha) {
    auto it = mean_cache.find(alpha);
    if (it != mean_cache.end()) return it->second;
    double s = 0.0;
    for (Index f : comp_cells) {
      IVec c = w3.unflatten(f);
      IVec g{0, 0, 0};
      bool ok = true;
      for (int a = 0; a < d; ++a) {
        g[a] = alpha[a] * n + c[a] - base[a];
        ok = ok && g[a] >= 0 && g[a] < lat.n[a];
      }
      if (!ok) throw GeometryError("glue window reads outside the field; margin too small");
      auto gi = static_cast<std::size_t>(lat.flatten(g));
      if (u.mask[gi] == 0.0)
        throw GeometryError("glue window hit an unmasked node inside the component");
      s += u.values[gi];
    }
    double m = s / static_cast<double>(comp_cells.size());
    mean_cache[alpha] = m;
    return m;
  };

  Lattice olat = out.lattice();
  for (Index f = 0; f < olat.size(); ++f) {
    IVec oc = olat.unflatten(f);
    IVec gc{0, 0, 0};
    for (int a = 0; a < d; ++a) gc[a] = lo[a] + oc[a];
    auto ui = static_cast<std::size_t>(lat.flatten(gc));
    if (u.mask[ui] != 0.0) {
      // Lu = u on E: copy bitwise rather than re-deriving through the blend.
      out.values[static_cast<std::size_t>(f)] = u.values[ui];
      continue;
    }
    // Global cell -> candidate translates alpha with x - alpha in (0,2)^d.
    IVec cell_global{0, 0, 0};
    for (int a = 0; a < d; ++a) cell_global[a] = base[a] + gc[a];
    double acc = 0.0;
    IVec alpha{0, 0, 0};
    IVec a_lo{0, 0, 0};
    for (int a = 0; a < d; ++a)
      a_lo[a] = static_cast<Index>(std::floor((static_cast<double>(cell_global[a]) + 0.5) / n)) - 1;
    Index steps[3] = {2, d > 1 ? 2 : 1, d > 2 ? 2 : 1};
    for (Index s0 = 0; s0 < steps[0]; ++s0)
      for (Index s1 = 0; s1 < steps[1]; ++s1)
        for (Index s2 = 0; s2 < steps[2]; ++s2) {
          alpha = {a_lo[0] + 1 - s0, d > 1 ? a_lo[1] + 1 - s1 : 0, d > 2 ? a_lo[2] + 1 - s2 : 0};
          IVec lc{0, 0, 0};
          bool in2q = true;
          for (int a = 0; a < d; ++a) {
            lc[a] = cell_global[a] - alpha[a] * n;
            in2q = in2q && lc[a] >= 0 && lc[a] < 2 * n;
          }
          if (!in2q) continue;
          Vec y{0, 0, 0};
          for (int a = 0; a < d; ++a) y[a] = (static_cast<double>(lc[a]) + 0.5) * h;
          double psi = psi_weight(y, d);
          if (psi == 0.0) continue;
          auto ls = static_cast<std::size_t>(w2.flatten(lc));
          double val;
          switch (plan.branch[ls]) {
            case ExtensionPlan::component: {
              // The node itself is unmasked, so a component branch here means
              // the raster and continuum membership disagree.
              throw GeometryError("glue: component branch at an unmasked node");
            }
            case ExtensionPlan::collar: {
              IVec tc = w3.unflatten(plan.reflect[ls]);
              IVec g{0, 0, 0};
              bool ok = true;
              for (int a = 0; a < d; ++a) {
                g[a] = alpha[a] * n + tc[a] - base[a];
                ok = ok && g[a] >= 0 && g[a] < lat.n[a];
              }
              if (!ok) throw GeometryError("glue reflection reads outside the field");
              auto gi2 = static_cast<std::size_t>(lat.flatten(g));
              if (u.mask[gi2] == 0.0)
                throw GeometryError("glue reflection hit an unmasked node");
              double uv = u.values[gi2];
              val = plan.phi[ls] * uv + (1.0 - plan.phi[ls]) * component_mean(alpha);
              break;
            }
            case ExtensionPlan::far:
            default:
              val = component_mean(alpha);
              break;
          }
          acc += psi * val;
        }
    out.values[static_cast<std::size_t>(f)] = acc;
  }
  return out;
}

GridField scaled_extend(const ExtensionPlan& plan, const GridField& u, double eps) {
  int d = plan.dom.dim();
  int n = plan.dom.resolution;
  double k0 = plan.k0();
  if (eps * k0 >= 0.5 * u.region.min_extent()) {
    std::ostringstream os;
    os << "eps too large: eps * k0 = " << eps * k0 << " must stay below half the region extent "
       << 0.5 * u.region.min_extent();
    throw GeometryError(os.str());
  }
  double want_h = eps / n;
  if (std::abs(u.region.spacing - want_h) > kAlignTol * want_h)
    throw GeometryError("scaled_extend needs grid spacing eps/n so rescaled nodes hit the raster");

  // Rescale to the unit periodicity cell.
  Vec org{0, 0, 0}, ext{1, 1, 1};
  for (int a = 0; a < d; ++a) {
    org[a] = u.region.origin[a] / eps;
    ext[a] = u.region.extent[a] / eps;
  }
  GridField scaled(BoxRegion(d, org, ext, 1.0 / n));
  scaled.values = u.values;
  scaled.mask = u.mask;

  BoxRegion glue_target = retract(scaled.region, 0.5 * k0);
  GridField glued = glue(plan, scaled, glue_target);

  // Assemble T_eps u on the original grid: u on masked nodes, the glued value
  // elsewhere in Omega(eps k0), zero outside.
  BoxRegion inner = retract(u.region, eps * k0);
  GridField out(u.region);
  Lattice lat = u.lattice();
  Lattice glat = glued.lattice();
  IVec gbase{0, 0, 0};
  for (int a = 0; a < d; ++a)
    gbase[a] = static_cast<Index>(std::llround((glued.region.origin[a] - scaled.region.origin[a]) * n));
  for (Index i = 0; i < lat.size(); ++i) {
    IVec c = lat.unflatten(i);
    Vec x = u.region.node_center(c);
    auto s = static_cast<std::size_t>(i);
    if (!inner.contains(x)) {
      out.values[s] = 0.0;
      continue;
    }
    if (u.mask[s] != 0.0) {
      out.values[s] = u.values[s];
      continue;
    }
    IVec g{0, 0, 0};
    bool ok = true;
    for (int a = 0; a < d; ++a) {
      g[a] = c[a] - gbase[a];
      ok = ok && g[a] >= 0 && g[a] < glat.n[a];
    }
    if (!ok) throw GeometryError("scaled_extend: node of Omega(eps k0) missing from the glue window");
    out.values[s] = glued.values[static_cast<std::size_t>(glat.flatten(g))];
  }
  return out;
}

TheoremRatio theorem_ratio(const ExtensionPlan& plan, const GridField& u, double eps, double r,
                           double p) {
  GridField tu = scaled_extend(plan, u, eps);
  BoxRegion inner = retract(u.region, eps * plan.k0());
  std::vector<double> m_in = box_membership_mask(tu, inner);
  double num = range_pair_sum(tu, m_in, m_in, eps * plan.R_est, p).sum *
               std::pow(u.region.spacing, 2 * u.region.dim);
  double den = range_pair_sum(u, u.mask, u.mask, eps * r, p).sum *
               std::pow(u.region.spacing, 2 * u.region.dim);
  TheoremRatio out;
  out.numerator = num;
  out.denominator = den;
  if (den == 0.0) {
    out.ratio = 0.0;
    out.infinite = num > 1e-30;
  } else {
    out.ratio = num / den;
  }
  return out;
}

EstimateConstants estimate_constants(const ExtensionPlan& plan, const GridField& u, double eps,
                                     double r, double p) {
  GridField tu = scaled_extend(plan, u, eps);
  BoxRegion inner = retract(u.region, eps * plan.k0());
  std::vector<double> m_in = box_membership_mask(tu, inner);
  double vol_in = masked_measure(tu, m_in);
  double vol_e = masked_measure(u, u.mask);
  if (vol_in == 0.0) throw GeometryError("Omega(eps k0) holds no grid node");

  EstimateConstants est;
  double num1 = masked_lp(tu, m_in, p) / vol_in;
  double den1 = masked_lp(u, u.mask, p) / vol_e;
  if (den1 == 0.0) {
    est.c1_hat = 0.0;
    est.c1_infinite = num1 != 0.0;
  } else {
    est.c1_hat = num1 / den1;
  }

  double h2d = std::pow(u.region.spacing, 2 * u.region.dim);
  double num2 = range_pair_sum(tu, m_in, m_in, eps * plan.R_est, p).sum * h2d / vol_in;
  double den2 = range_pair_sum(u, u.mask, u.mask, eps * r, p).sum * h2d / vol_e;
  if (den2 == 0.0) {
    est.c2_hat = 0.0;
    est.c2_infinite = num2 > 1e-30;
  } else {
    est.c2_hat = num2 / den2;
  }
  return est;
}

CounterexampleReport reflection_counterexample(int resolution, double p) {
  // Material set B: unit ball at the origin. omega: the diagonal slab
  // {x in (-1,2), 1 <= x+y <= 2}. u = 1 on B minus omega, 0 on B cap omega.
  const double t = 0.15;
  const double R = 0.1;
  const double margin = 0.3;
  int d = 2;
  double h = 1.0 / resolution;
  BoxRegion box(d, Vec{-1.5, -1.5, 0}, Vec{4.0, 4.0, 1}, h);
  GridField phiu(box);
  Lattice lat = box.lattice();

  auto in_omega = [](const Vec& x) {
    double s = x[0] + x[1];
    return x[0] > -1.0 && x[0] < 2.0 && s >= 1.0 && s <= 2.0;
  };
  auto in_omega_margined = [&](const Vec& x) {
    double s = x[0] + x[1];
    double m = margin;
    return x[0] > -1.0 + m && x[0] < 2.0 - m && s >= 1.0 + std::sqrt(2.0) * m &&
           s <= 2.0 - std::sqrt(2.0) * m;
  };
  auto u_val = [&](const Vec& x) { return in_omega(x) ? 0.0 : 1.0; };  // on B only

  // u has mean zero over B cap omega, so the blend reduces to phi * u(refl).
  std::vector<double> m_omega(phiu.values.size(), 0.0);
  std::vector<double> m_omega_m(phiu.values.size(), 0.0);
  std::vector<double> m_bomega(phiu.values.size(), 0.0);
  for (Index i = 0; i < lat.size(); ++i) {
    Vec x = box.node_center(lat.unflatten(i));
    auto s = static_cast<std::size_t>(i);
    double rr = std::sqrt(x[0] * x[0] + x[1] * x[1]);
    double val;
    if (rr <= 1.0) {
      val = u_val(x);
    } else if (rr < 1.0 + t) {
      Vec z{x[0] * (2.0 - rr) / rr, x[1] * (2.0 - rr) / rr, 0};
      double phi = 1.0 - smoothstep5((rr - 1.0) / t);
      val = phi * u_val(z);
    } else {
      val = 0.0;  // mean of u over B cap omega
    }
    phiu.values[s] = val;
    m_omega[s] = in_omega(x) ? 1.0 : 0.0;
    m_omega_m[s] = in_omega_margined(x) ? 1.0 : 0.0;
    m_bomega[s] = (rr <= 1.0 && in_omega(x)) ? 1.0 : 0.0;
  }

  GridField uu(box);
  for (Index i = 0; i < lat.size(); ++i) {
    Vec x = box.node_center(lat.unflatten(i));
    auto s = static_cast<std::size_t>(i);
    uu.values[s] = x[0] * x[0] + x[1] * x[1] <= 1.0 ? u_val(x) : 0.0;
  }

  double h4 = std::pow(h, 2 * d);
  CounterexampleReport rep;
  rep.unmargined_numerator = range_pair_sum(phiu, m_omega, m_omega, R, p).sum * h4;
  rep.unmargined_denominator = range_pair_sum(uu, m_bomega, m_bomega, R, p).sum * h4;
  rep.margined_numerator = range_pair_sum(phiu, m_omega_m, m_omega_m, R, p).sum * h4;
  rep.margined_denominator = rep.unmargined_denominator;
  rep.margined_ratio = rep.margined_denominator == 0.0
                           ? 0.0
                           : rep.margined_numerator / rep.margined_denominator;
  return rep;
}

}  // namespace nlhom
