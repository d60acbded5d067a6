#include "nlhom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>

namespace nlhom {

namespace {

// Wrapped coordinate of x relative to the hole translate nearest to it.
// Returns the integer shift s with x - s closest to the hole's bounding region.
bool hole_contains(const HoleSpec& h, int dim, const Vec& x, Vec* shift) {
  // Candidate translates: holes live inside (or overlapping) [0,1)^d, so the
  // relevant shift components are floor(x) + {-1, 0, 1}.
  IVec base{};
  for (int a = 0; a < dim; ++a) base[a] = static_cast<Index>(std::floor(x[a]));
  IVec off{0, 0, 0};
  int range[3] = {1, dim > 1 ? 1 : 0, dim > 2 ? 1 : 0};
  for (off[0] = -range[0]; off[0] <= range[0]; ++off[0])
    for (off[1] = -range[1]; off[1] <= range[1]; ++off[1])
      for (off[2] = -range[2]; off[2] <= range[2]; ++off[2]) {
        Vec s{0, 0, 0};
        Vec local{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
          s[a] = static_cast<double>(base[a] + off[a]);
          local[a] = x[a] - s[a];
        }
        bool inside = true;
        if (h.shape == HoleSpec::Shape::box) {
          for (int a = 0; a < dim && inside; ++a)
            inside = local[a] >= h.lo[a] && local[a] <= h.hi[a];
        } else {
          double r2 = 0.0;
          for (int a = 0; a < dim; ++a) {
            double dlt = local[a] - h.center[a];
            r2 += dlt * dlt;
          }
          inside = r2 <= h.radius * h.radius;
        }
        if (inside) {
          if (shift) *shift = s;
          return true;
        }
      }
  return false;
}

double set_distance(const HoleSpec& a, const Vec& sa, const HoleSpec& b, const Vec& sb, int dim) {
  // Distance between translated holes a+sa and b+sb.
  auto box_gap = [&](const Vec& alo, const Vec& ahi, const Vec& blo, const Vec& bhi) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      double g = std::max({0.0, blo[i] - ahi[i], alo[i] - bhi[i]});
      d2 += g * g;
    }
    return std::sqrt(d2);
  };
  auto point_box = [&](const Vec& p, const Vec& blo, const Vec& bhi) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      double g = std::max({0.0, blo[i] - p[i], p[i] - bhi[i]});
      d2 += g * g;
    }
    return std::sqrt(d2);
  };
  Vec alo{}, ahi{}, blo{}, bhi{}, ac{}, bc{};
  for (int i = 0; i < dim; ++i) {
    alo[i] = a.lo[i] + sa[i];
    ahi[i] = a.hi[i] + sa[i];
    blo[i] = b.lo[i] + sb[i];
    bhi[i] = b.hi[i] + sb[i];
    ac[i] = a.center[i] + sa[i];
    bc[i] = b.center[i] + sb[i];
  }
  bool abox = a.shape == HoleSpec::Shape::box;
  bool bbox = b.shape == HoleSpec::Shape::box;
  if (abox && bbox) return box_gap(alo, ahi, blo, bhi);
  if (!abox && !bbox) {
    double d = 0.0;
    for (int i = 0; i < dim; ++i) {
      double dlt = ac[i] - bc[i];
      d += dlt * dlt;
    }
    return std::max(0.0, std::sqrt(d) - a.radius - b.radius);
  }
  const Vec& p = abox ? bc : ac;
  double rad = abox ? b.radius : a.radius;
  const Vec& lo = abox ? alo : blo;
  const Vec& hi = abox ? ahi : bhi;
  return std::max(0.0, point_box(p, lo, hi) - rad);
}

}  // namespace

bool DomainSpec::contains(const Vec& x) const {
  for (const auto& h : holes) {
    if (hole_contains(h, dim, x, nullptr)) return false;
  }
  return true;
}

std::optional<std::size_t> DomainSpec::containing_hole(const Vec& x, Vec* shift) const {
  for (std::size_t i = 0; i < holes.size(); ++i) {
    if (hole_contains(holes[i], dim, x, shift)) return i;
  }
  return std::nullopt;
}

double DomainSpec::hole_boundary_depth(const HoleSpec& h, const Vec& local, int dim) {
  if (h.shape == HoleSpec::Shape::box) {
    double depth = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a)
      depth = std::min({depth, local[a] - h.lo[a], h.hi[a] - local[a]});
    return depth;
  }
  double r = 0.0;
  for (int a = 0; a < dim; ++a) {
    double dlt = local[a] - h.center[a];
    r += dlt * dlt;
  }
  return h.radius - std::sqrt(r);
}

double DomainSpec::min_hole_gap() const {
  double best = std::numeric_limits<double>::infinity();
  // All hole translates meeting the 3Q window.
  struct T {
    std::size_t idx;
    Vec shift;
  };
  std::vector<T> ts;
  Index lo = -1, hi = 3;
  IVec s{};
  Index r1 = dim > 1 ? hi : 0, l1 = dim > 1 ? lo : 0;
  Index r2 = dim > 2 ? hi : 0, l2 = dim > 2 ? lo : 0;
  for (std::size_t i = 0; i < holes.size(); ++i)
    for (s[0] = lo; s[0] <= hi; ++s[0])
      for (s[1] = l1; s[1] <= r1; ++s[1])
        for (s[2] = l2; s[2] <= r2; ++s[2]) {
          Vec sh{static_cast<double>(s[0]), static_cast<double>(s[1]),
                 static_cast<double>(s[2])};
          ts.push_back({i, sh});
        }
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      bool same_translate = ts[i].idx == ts[j].idx;
      if (same_translate) {
        bool same_shift = true;
        for (int a = 0; a < dim; ++a)
          same_shift = same_shift && ts[i].shift[a] == ts[j].shift[a];
        if (same_shift) continue;
      }
      double g = set_distance(holes[ts[i].idx], ts[i].shift, holes[ts[j].idx], ts[j].shift, dim);
      best = std::min(best, g);
    }
  return best;
}

Index PeriodicDomain::true_cell_count() const {
  Index c = 0;
  for (auto v : indicator) c += v != 0 ? 1 : 0;
  return c;
}

BoxRegion::BoxRegion(int d, Vec org, Vec ext, double h) : dim(d), origin(org), extent(ext), spacing(h) {
  if (h <= 0) throw GeometryError("grid spacing must be positive");
  for (int a = 0; a < d; ++a) {
    if (ext[a] <= 0) throw GeometryError("box extent must be positive");
    double cells = ext[a] / h;
    double r = std::round(cells);
    if (std::abs(cells - r) > 1e-9 * std::max(1.0, cells))
      throw GeometryError("grid spacing does not divide the box extent");
  }
}

Lattice BoxRegion::lattice() const {
  IVec n{1, 1, 1};
  for (int a = 0; a < dim; ++a) n[a] = static_cast<Index>(std::llround(extent[a] / spacing));
  return Lattice(dim, n);
}

PeriodicDomain rasterize_domain(const DomainSpec& spec, int n) {
  if (spec.dim < 1 || spec.dim > 3) throw GeometryError("domain dimension must be 1, 2 or 3");
  if (n < 8) throw GeometryError("unit-cell resolution must be at least 8");
  PeriodicDomain dom;
  dom.spec = spec;
  dom.resolution = n;
  Lattice lat = dom.cell_lattice();
  dom.indicator.assign(static_cast<std::size_t>(lat.size()), 0);
  IVec i{};
  for (Index f = 0; f < lat.size(); ++f) {
    i = lat.unflatten(f);
    Vec x{0, 0, 0};
    for (int a = 0; a < spec.dim; ++a) x[a] = (static_cast<double>(i[a]) + 0.5) / n;
    dom.indicator[static_cast<std::size_t>(f)] = spec.contains(x) ? 1 : 0;
  }
  if (dom.true_cell_count() == 0) throw GeometryError("domain is empty: no cell center lies in E");

  // Necessary connectivity check: flood fill on the torus (wraparound
  // adjacency). Universal-cover connectivity is certified later by
  // component_selection.
  std::vector<std::uint8_t> seen(dom.indicator.size(), 0);
  Index start = -1;
  for (Index f = 0; f < lat.size(); ++f)
    if (dom.indicator[static_cast<std::size_t>(f)]) {
      start = f;
      break;
    }
  std::deque<Index> q{start};
  seen[static_cast<std::size_t>(start)] = 1;
  Index reached = 1;
  while (!q.empty()) {
    Index f = q.front();
    q.pop_front();
    IVec c = lat.unflatten(f);
    for (int a = 0; a < spec.dim; ++a)
      for (int s = -1; s <= 1; s += 2) {
        IVec nb = c;
        nb[a] = (nb[a] + s + n) % n;
        Index g = lat.flatten(nb);
        if (!seen[static_cast<std::size_t>(g)] && dom.indicator[static_cast<std::size_t>(g)]) {
          seen[static_cast<std::size_t>(g)] = 1;
          ++reached;
          q.push_back(g);
        }
      }
  }
  if (reached != dom.true_cell_count())
    throw GeometryError("domain is not periodically connected (torus flood fill found multiple components)");
  return dom;
}

ComponentMask component_selection(const PeriodicDomain& dom, int k_max) {
  int d = dom.dim();
  int n = dom.resolution;
  for (int k = 4; k <= k_max; ++k) {
    Index m = static_cast<Index>(k) * n;
    Lattice win(d, {m, m, m});
    std::vector<std::uint8_t> e(static_cast<std::size_t>(win.size()), 0);
    for (Index f = 0; f < win.size(); ++f) {
      IVec i = win.unflatten(f);
      e[static_cast<std::size_t>(f)] = dom.cell(i) ? 1 : 0;
    }
    // Face-adjacency flood fill, no wraparound: label components.
    std::vector<std::int32_t> label(e.size(), -1);
    std::int32_t ncomp = 0;
    std::deque<Index> q;
    for (Index f0 = 0; f0 < win.size(); ++f0) {
      if (!e[static_cast<std::size_t>(f0)] || label[static_cast<std::size_t>(f0)] >= 0) continue;
      std::int32_t id = ncomp++;
      label[static_cast<std::size_t>(f0)] = id;
      q.push_back(f0);
      while (!q.empty()) {
        Index f = q.front();
        q.pop_front();
        IVec c = win.unflatten(f);
        for (int a = 0; a < d; ++a)
          for (int s = -1; s <= 1; s += 2) {
            IVec nb = c;
            nb[a] += s;
            if (!win.in_range(nb)) continue;
            Index g = win.flatten(nb);
            if (e[static_cast<std::size_t>(g)] && label[static_cast<std::size_t>(g)] < 0) {
              label[static_cast<std::size_t>(g)] = id;
              q.push_back(g);
            }
          }
      }
    }
    // Does one component contain every true cell of 3Q?
    std::int32_t covering = -2;
    bool ok = true;
    Index lim = static_cast<Index>(3) * n;
    for (Index f = 0; f < win.size() && ok; ++f) {
      if (!e[static_cast<std::size_t>(f)]) continue;
      IVec c = win.unflatten(f);
      bool in3q = true;
      for (int a = 0; a < d; ++a) in3q = in3q && c[a] < lim;
      if (!in3q) continue;
      std::int32_t l = label[static_cast<std::size_t>(f)];
      if (covering == -2) covering = l;
      else if (covering != l) ok = false;
    }
    if (ok && covering >= 0) {
      ComponentMask cm;
      cm.k = k;
      cm.resolution = n;
      cm.c_tilde = 2.0 * std::sqrt(static_cast<double>(d)) * k;
      cm.k0 = 2.0 * cm.c_tilde;
      cm.mask.assign(e.size(), 0);
      for (std::size_t f = 0; f < e.size(); ++f)
        cm.mask[f] = (e[f] && label[f] == covering) ? 1 : 0;
      return cm;
    }
  }
  std::ostringstream os;
  os << "domain not usable: no k <= " << k_max
     << " gives a single component of kQ covering 3Q (set not connected across periods)";
  throw GeometryError(os.str());
}

BoxRegion retract(const BoxRegion& region, double lambda) {
  if (lambda < 0) throw GeometryError("retraction width must be nonnegative");
  if (lambda >= 0.5 * region.min_extent())
    throw GeometryError("retraction empties the region");
  BoxRegion r = region;
  for (int a = 0; a < region.dim; ++a) {
    r.origin[a] += lambda;
    r.extent[a] -= 2.0 * lambda;
  }
  return r;
}

namespace {

// Safe-vertex graph of Lemma-2.8 paths: vertices are component cells whose
// nu*r1 ball of cell centers lies in kQ cap E; edges join vertices within r1.
struct PathGraph {
  Lattice win;
  int dim;
  double h;
  std::vector<Index> vertex_of_cell;  // -1 when not a vertex
  std::vector<Index> cells;           // vertex -> cell flat index
  std::vector<IVec> edge_offsets;     // cell-index offsets with |o| h <= r1

  Vec center(Index cellflat) const {
    IVec c = win.unflatten(cellflat);
    Vec x{0, 0, 0};
    for (int a = 0; a < dim; ++a) x[a] = (static_cast<double>(c[a]) + 0.5) * h;
    return x;
  }
};

PathGraph build_path_graph(const PeriodicDomain& dom, const ComponentMask& comp,
                           double r1, double nu) {
  int d = dom.dim();
  int n = dom.resolution;
  double h = 1.0 / n;
  PathGraph g;
  g.win = comp.window_lattice(d);
  g.dim = d;
  g.h = h;

  // Ball offsets for the inscribed-ball test.
  double ball_r = nu * r1;
  Index br = static_cast<Index>(std::floor(ball_r / h + 1e-12));
  std::vector<IVec> ball_offsets;
  IVec o{};
  Index b1 = d > 1 ? br : 0, b2 = d > 2 ? br : 0;
  for (o[0] = -br; o[0] <= br; ++o[0])
    for (o[1] = -b1; o[1] <= b1; ++o[1])
      for (o[2] = -b2; o[2] <= b2; ++o[2]) {
        double r = std::sqrt(static_cast<double>(o[0] * o[0] + o[1] * o[1] + o[2] * o[2])) * h;
        if (r <= ball_r + 1e-12) ball_offsets.push_back(o);
      }

  g.vertex_of_cell.assign(static_cast<std::size_t>(g.win.size()), -1);
  for (Index f = 0; f < g.win.size(); ++f) {
    if (!comp.mask[static_cast<std::size_t>(f)]) continue;
    IVec c = g.win.unflatten(f);
    bool safe = true;
    for (const auto& bo : ball_offsets) {
      IVec nb = c;
      for (int a = 0; a < 3; ++a) nb[a] += bo[a];
      if (!g.win.in_range(nb) || !dom.cell(nb)) {
        safe = false;
        break;
      }
    }
    if (safe) {
      g.vertex_of_cell[static_cast<std::size_t>(f)] = static_cast<Index>(g.cells.size());
      g.cells.push_back(f);
    }
  }

  Index er = static_cast<Index>(std::floor(r1 / h + 1e-12));
  Index e1 = d > 1 ? er : 0, e2 = d > 2 ? er : 0;
  for (o[0] = -er; o[0] <= er; ++o[0])
    for (o[1] = -e1; o[1] <= e1; ++o[1])
      for (o[2] = -e2; o[2] <= e2; ++o[2]) {
        if (o[0] == 0 && o[1] == 0 && o[2] == 0) continue;
        double r = std::sqrt(static_cast<double>(o[0] * o[0] + o[1] * o[1] + o[2] * o[2])) * h;
        if (r <= r1 + 1e-12) g.edge_offsets.push_back(o);
      }
  return g;
}

std::vector<std::int32_t> bfs_from(const PathGraph& g, Index src_vertex) {
  std::vector<std::int32_t> dist(g.cells.size(), -1);
  std::deque<Index> q{src_vertex};
  dist[static_cast<std::size_t>(src_vertex)] = 0;
  while (!q.empty()) {
    Index v = q.front();
    q.pop_front();
    IVec c = g.win.unflatten(g.cells[static_cast<std::size_t>(v)]);
    for (const auto& o : g.edge_offsets) {
      IVec nb = c;
      for (int a = 0; a < 3; ++a) nb[a] += o[a];
      if (!g.win.in_range(nb)) continue;
      Index w = g.vertex_of_cell[static_cast<std::size_t>(g.win.flatten(nb))];
      if (w < 0 || dist[static_cast<std::size_t>(w)] >= 0) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
      q.push_back(w);
    }
  }
  return dist;
}

Index nearest_vertex(const PathGraph& g, const Vec& p, double r1) {
  Index best = -1;
  double bestd = r1 + 1e-12;
  // Scan vertices within an r1 cube of p.
  for (std::size_t v = 0; v < g.cells.size(); ++v) {
    Vec c = g.center(g.cells[v]);
    double d2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      double dlt = c[a] - p[a];
      d2 += dlt * dlt;
    }
    double dd = std::sqrt(d2);
    if (dd < bestd) {
      bestd = dd;
      best = static_cast<Index>(v);
    }
  }
  return best;
}

}  // namespace

DiscretePath find_discrete_path(const PeriodicDomain& dom, const ComponentMask& comp,
                                const Vec& a, const Vec& b, double r1, double nu) {
  int d = dom.dim();
  double h = 1.0 / dom.resolution;
  if (nu <= 0 || nu > 1) throw GeometryError("nu must lie in (0, 1]");
  if (r1 <= 2.0 * h) throw GeometryError("r1 must exceed twice the grid spacing");

  DiscretePath path;
  path.r1 = r1;
  path.nu_r1 = nu * r1;
  double dab = 0.0;
  for (int i = 0; i < d; ++i) {
    double dlt = a[i] - b[i];
    dab += dlt * dlt;
  }
  dab = std::sqrt(dab);
  if (dab <= r1) {  // covers a == b
    path.points = {a, b};
    return path;
  }

  PathGraph g = build_path_graph(dom, comp, r1, nu);
  Index va = nearest_vertex(g, a, r1);
  Index vb = nearest_vertex(g, b, r1);
  if (va < 0 || vb < 0) {
    std::ostringstream os;
    const Vec& bad = va < 0 ? a : b;
    os << "no safe vertex within r1 of (" << bad[0];
    for (int i = 1; i < d; ++i) os << ", " << bad[i];
    os << "); resolution too coarse for nu=" << nu << ", r1=" << r1;
    throw GeometryError(os.str());
  }
  std::vector<std::int32_t> dist = bfs_from(g, va);
  if (dist[static_cast<std::size_t>(vb)] < 0) {
    std::ostringstream os;
    os << "no discrete path reaches (" << b[0];
    for (int i = 1; i < d; ++i) os << ", " << b[i];
    os << ") with nu=" << nu << ", r1=" << r1;
    throw GeometryError(os.str());
  }
  // Backtrack from vb along decreasing distance.
  std::vector<Index> chain{vb};
  Index cur = vb;
  while (cur != va) {
    IVec c = g.win.unflatten(g.cells[static_cast<std::size_t>(cur)]);
    Index nxt = -1;
    for (const auto& o : g.edge_offsets) {
      IVec nb = c;
      for (int i = 0; i < 3; ++i) nb[i] += o[i];
      if (!g.win.in_range(nb)) continue;
      Index w = g.vertex_of_cell[static_cast<std::size_t>(g.win.flatten(nb))];
      if (w >= 0 && dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(cur)] - 1) {
        nxt = w;
        break;
      }
    }
    chain.push_back(nxt);
    cur = nxt;
  }
  path.points.push_back(a);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    path.points.push_back(g.center(g.cells[static_cast<std::size_t>(*it)]));
  path.points.push_back(b);
  return path;
}

int path_length_bound(const PeriodicDomain& dom, const ComponentMask& comp,
                      double r1, double nu) {
  PathGraph g = build_path_graph(dom, comp, r1, nu);
  if (g.cells.empty()) throw GeometryError("no safe vertices: resolution too coarse for nu*r1");
  std::int32_t diam = 0;
  for (std::size_t v = 0; v < g.cells.size(); ++v) {
    std::vector<std::int32_t> dist = bfs_from(g, static_cast<Index>(v));
    for (auto dd : dist) diam = std::max(diam, dd);
  }
  // Endpoints attach to vertices, so interior point count is edge count + 1.
  return diam + 1;
}

}  // namespace nlhom
