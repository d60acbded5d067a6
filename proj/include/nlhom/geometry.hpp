#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlhom/errors.hpp"
#include "nlhom/lattice.hpp"

namespace nlhom {

// Axis-aligned box or ball removed from the unit cell; translated by Z^d.
struct HoleSpec {
  enum class Shape { box, ball };
  Shape shape = Shape::box;
  Vec lo{0, 0, 0};  // box corners
  Vec hi{0, 0, 0};
  Vec center{0, 0, 0};  // ball
  double radius = 0.0;
};

// Constructive description of the periodic open set E: the complement of
// periodically repeated holes. Membership tests are continuum and exact.
struct DomainSpec {
  int dim = 2;
  std::vector<HoleSpec> holes;
  std::string label;

  bool contains(const Vec& x) const;
  // Index of the hole whose translate contains x, or nullopt. `shift` receives
  // the integer translate so hole-local coordinates are x - shift.
  std::optional<std::size_t> containing_hole(const Vec& x, Vec* shift) const;
  // Distance from an interior point of a hole to that hole's boundary.
  static double hole_boundary_depth(const HoleSpec& h, const Vec& local, int dim);
  // Minimal gap between distinct hole translates within the 3Q window
  // (+inf when fewer than two translates interact); used for the collar width.
  double min_hole_gap() const;
};

struct PeriodicDomain {
  DomainSpec spec;
  int resolution = 0;                    // n cells per unit-cell edge
  std::vector<std::uint8_t> indicator;   // n^d cells, cell-center sampled

  int dim() const { return spec.dim; }
  Lattice cell_lattice() const {
    return Lattice(spec.dim, {resolution, resolution, resolution});
  }
  // Indicator of the periodic tiling at an arbitrary cell index (wraps).
  bool cell(IVec i) const {
    int n = resolution;
    for (int a = 0; a < spec.dim; ++a) {
      i[a] %= n;
      if (i[a] < 0) i[a] += n;
    }
    for (int a = spec.dim; a < 3; ++a) i[a] = 0;
    return indicator[static_cast<std::size_t>(cell_lattice().flatten(i))] != 0;
  }
  // Continuum membership of a point (periodic).
  bool contains_point(const Vec& x) const { return spec.contains(x); }
  Index true_cell_count() const;
};

// Axis-aligned box region carrying its own grid spacing. Nodes sit at cell
// centers origin + (i + 1/2) h.
struct BoxRegion {
  int dim = 2;
  Vec origin{0, 0, 0};
  Vec extent{1, 1, 1};
  double spacing = 0.0;

  BoxRegion() = default;
  BoxRegion(int d, Vec org, Vec ext, double h);

  Lattice lattice() const;
  Vec node_center(const IVec& i) const {
    Vec x{0, 0, 0};
    for (int a = 0; a < dim; ++a) x[a] = origin[a] + (static_cast<double>(i[a]) + 0.5) * spacing;
    return x;
  }
  bool contains(const Vec& x) const {
    for (int a = 0; a < dim; ++a)
      if (x[a] < origin[a] || x[a] > origin[a] + extent[a]) return false;
    return true;
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= extent[a];
    return v;
  }
  double min_extent() const {
    double m = extent[0];
    for (int a = 1; a < dim; ++a) m = m < extent[a] ? m : extent[a];
    return m;
  }
};

// Connected component C of the kQ window that covers all of 3Q cap E,
// together with the derived constants.
struct ComponentMask {
  int k = 0;
  int resolution = 0;
  std::vector<std::uint8_t> mask;  // (k n)^d window cells, corner-anchored
  double c_tilde = 0.0;            // 2 sqrt(d) k
  double k0 = 0.0;                 // 2 c_tilde

  Lattice window_lattice(int dim) const {
    Index m = static_cast<Index>(k) * resolution;
    return Lattice(dim, {m, m, m});
  }
  bool cell(int dim, const IVec& i) const {
    Lattice w = window_lattice(dim);
    if (!w.in_range(i)) return false;
    return mask[static_cast<std::size_t>(w.flatten(i))] != 0;
  }
};

struct DiscretePath {
  std::vector<Vec> points;  // eta_0 = a, ..., eta_{N+1} = b
  double r1 = 0.0;
  double nu_r1 = 0.0;
  int interior_count() const { return static_cast<int>(points.size()) - 2; }
};

PeriodicDomain rasterize_domain(const DomainSpec& spec, int n);

ComponentMask component_selection(const PeriodicDomain& dom, int k_max = 16);

BoxRegion retract(const BoxRegion& region, double lambda);

DiscretePath find_discrete_path(const PeriodicDomain& dom, const ComponentMask& comp,
                                const Vec& a, const Vec& b, double r1, double nu);

// Uniform path-length bound N_bar(r1, nu): exhaustive BFS diameter of the
// safe-vertex graph reachable from 3Q, plus one for the endpoint hops.
int path_length_bound(const PeriodicDomain& dom, const ComponentMask& comp,
                      double r1, double nu);

}  // namespace nlhom
