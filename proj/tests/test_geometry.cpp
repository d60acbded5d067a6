#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlhom/geometry.hpp"

using namespace nlhom;

namespace {

DomainSpec full_space(int d) {
  DomainSpec s;
  s.dim = d;
  return s;
}

DomainSpec square_hole(int d = 2) {
  DomainSpec s;
  s.dim = d;
  HoleSpec h;
  h.shape = HoleSpec::Shape::box;
  for (int a = 0; a < d; ++a) {
    h.lo[a] = 0.25;
    h.hi[a] = 0.75;
  }
  s.holes.push_back(h);
  return s;
}

DomainSpec ball_hole(double r) {
  DomainSpec s;
  s.dim = 2;
  HoleSpec h;
  h.shape = HoleSpec::Shape::ball;
  h.center = {0.5, 0.5, 0};
  h.radius = r;
  s.holes.push_back(h);
  return s;
}

}  // namespace

TEST_CASE("rasterize full space counts every cell") {
  PeriodicDomain dom = rasterize_domain(full_space(2), 16);
  CHECK(dom.true_cell_count() == 256);
}

TEST_CASE("rasterize square hole at aligned resolution is exact") {
  PeriodicDomain dom = rasterize_domain(square_hole(), 16);
  CHECK(dom.true_cell_count() == 256 - 64);
}

TEST_CASE("rasterize ball hole matches enumeration and area") {
  int n = 64;
  PeriodicDomain dom = rasterize_domain(ball_hole(0.3), n);
  // Independent enumeration of cell centers outside the ball.
  Index expect = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x = (i + 0.5) / n - 0.5, y = (j + 0.5) / n - 0.5;
      if (x * x + y * y > 0.09) ++expect;
    }
  CHECK(dom.true_cell_count() == expect);
  double area = (1.0 - M_PI * 0.09) * n * n;
  CHECK(std::abs(static_cast<double>(dom.true_cell_count()) - area) < 0.02 * area);
}

TEST_CASE("rasterize rejects empty and periodically disconnected sets") {
  DomainSpec empty;
  empty.dim = 2;
  HoleSpec h;
  h.shape = HoleSpec::Shape::box;
  h.lo = {-0.1, -0.1, 0};
  h.hi = {1.1, 1.1, 0};
  empty.holes.push_back(h);
  CHECK_THROWS_AS(rasterize_domain(empty, 16), GeometryError);

  // Two full-width strips leave two torus components.
  DomainSpec strips;
  strips.dim = 2;
  HoleSpec h1 = h, h2 = h;
  h1.lo = {-0.1, 0.2, 0};
  h1.hi = {1.1, 0.4, 0};
  h2.lo = {-0.1, 0.7, 0};
  h2.hi = {1.1, 0.9, 0};
  strips.holes = {h1, h2};
  CHECK_THROWS_AS(rasterize_domain(strips, 16), GeometryError);
}

TEST_CASE("component selection on the full space covers the window at k = 4") {
  for (int n : {16, 32}) {
    PeriodicDomain dom = rasterize_domain(full_space(2), n);
    ComponentMask cm = component_selection(dom);
    CHECK(cm.k == 4);
    Index covered = 0;
    for (auto v : cm.mask) covered += v;
    CHECK(covered == static_cast<Index>(4 * n) * (4 * n));
    CHECK(cm.c_tilde == doctest::Approx(2.0 * std::sqrt(2.0) * 4));
    CHECK(cm.k0 == doctest::Approx(4.0 * std::sqrt(2.0) * 4));
  }
}

TEST_CASE("component selection on the square-hole domain") {
  PeriodicDomain dom = rasterize_domain(square_hole(), 16);
  ComponentMask cm = component_selection(dom);
  CHECK(cm.k == 4);
  // Mask must be exactly 4Q cap E (one component).
  Lattice w = cm.window_lattice(2);
  for (Index f = 0; f < w.size(); ++f) {
    bool in_e = dom.cell(w.unflatten(f));
    CHECK(static_cast<bool>(cm.mask[static_cast<std::size_t>(f)]) == in_e);
  }
}

TEST_CASE("component selection rejects a single horizontal slab") {
  // One full-width hole leaves horizontal slabs: torus-connected but the
  // window components never cover 3Q.
  DomainSpec slab;
  slab.dim = 2;
  HoleSpec h;
  h.shape = HoleSpec::Shape::box;
  h.lo = {-0.1, 0.25, 0};
  h.hi = {1.1, 0.75, 0};
  slab.holes.push_back(h);
  PeriodicDomain dom = rasterize_domain(slab, 16);
  CHECK_THROWS_AS(component_selection(dom), GeometryError);
}

TEST_CASE("retract boxes") {
  BoxRegion unit(2, {0, 0, 0}, {1, 1, 1}, 1.0 / 16);
  BoxRegion same = retract(unit, 0.0);
  CHECK(same.origin[0] == 0.0);
  CHECK(same.extent[0] == 1.0);

  BoxRegion r = retract(unit, 0.25);
  CHECK(r.origin[0] == doctest::Approx(0.25));
  CHECK(r.origin[1] == doctest::Approx(0.25));
  CHECK(r.extent[0] == doctest::Approx(0.5));

  BoxRegion rect(2, {0, 0, 0}, {2, 1, 1}, 1.0 / 16);
  BoxRegion r2 = retract(rect, 0.1);
  CHECK(r2.origin[0] == doctest::Approx(0.1));
  CHECK(r2.extent[0] == doctest::Approx(1.8));
  CHECK(r2.origin[1] == doctest::Approx(0.1));
  CHECK(r2.extent[1] == doctest::Approx(0.8));

  // Composition.
  BoxRegion c1 = retract(retract(unit, 0.1), 0.15);
  BoxRegion c2 = retract(unit, 0.25);
  CHECK(c1.origin[0] == doctest::Approx(c2.origin[0]));
  CHECK(c1.extent[0] == doctest::Approx(c2.extent[0]));

  CHECK_THROWS_AS(retract(unit, 0.5), GeometryError);
}

TEST_CASE("discrete path with identical endpoints") {
  PeriodicDomain dom = rasterize_domain(full_space(2), 16);
  ComponentMask cm = component_selection(dom);
  Vec a{0.5, 0.5, 0};
  DiscretePath p = find_discrete_path(dom, cm, a, a, 0.5, 0.5);
  CHECK(p.interior_count() == 0);
}

TEST_CASE("discrete path across the full space") {
  PeriodicDomain dom = rasterize_domain(full_space(2), 16);
  ComponentMask cm = component_selection(dom);
  Vec a{0.1, 0.1, 0}, b{2.9, 2.9, 0};
  DiscretePath p = find_discrete_path(dom, cm, a, b, 0.5, 0.5);
  CHECK(p.interior_count() <= 16);
  for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
    double dx = p.points[i][0] - p.points[i + 1][0];
    double dy = p.points[i][1] - p.points[i + 1][1];
    CHECK(std::sqrt(dx * dx + dy * dy) <= 0.5 + 1e-12);
  }
}

TEST_CASE("discrete paths avoid holes and respect the uniform bound") {
  PeriodicDomain dom = rasterize_domain(square_hole(), 16);
  ComponentMask cm = component_selection(dom);
  double r1 = 4.0 / 16, nu = 0.5;
  int nbar = path_length_bound(dom, cm, r1, nu);
  CHECK(nbar >= 1);
  Vec pts[4] = {{0.1, 0.1, 0}, {2.9, 2.9, 0}, {0.1, 2.9, 0}, {1.5, 0.1, 0}};
  for (const Vec& a : pts)
    for (const Vec& b : pts) {
      DiscretePath p = find_discrete_path(dom, cm, a, b, r1, nu);
      CHECK(p.interior_count() <= nbar);
      // Interior points carry their safety ball inside kQ cap E.
      for (std::size_t i = 1; i + 1 < p.points.size(); ++i) {
        const Vec& q = p.points[i];
        int n = dom.resolution;
        Index br = static_cast<Index>(std::floor(p.nu_r1 * n + 1e-12));
        IVec c{static_cast<Index>(std::floor(q[0] * n)), static_cast<Index>(std::floor(q[1] * n)), 0};
        for (Index o0 = -br; o0 <= br; ++o0)
          for (Index o1 = -br; o1 <= br; ++o1) {
            if (std::sqrt(static_cast<double>(o0 * o0 + o1 * o1)) > p.nu_r1 * n + 1e-9) continue;
            IVec cc{c[0] + o0, c[1] + o1, 0};
            CHECK(cc[0] >= 0);
            CHECK(cc[0] < 4 * n);
            CHECK(dom.cell(cc));
          }
      }
    }
}

TEST_CASE("path planner reports unreachable targets") {
  PeriodicDomain dom = rasterize_domain(square_hole(), 16);
  ComponentMask cm = component_selection(dom);
  // nu r1 too fat for the corridors: no safe vertices anywhere.
  CHECK_THROWS_AS(find_discrete_path(dom, cm, Vec{0.1, 0.1, 0}, Vec{2.9, 2.9, 0}, 2.0, 1.0),
                  GeometryError);
}

TEST_CASE("refinement only flips cells near the boundary") {
  DomainSpec spec = ball_hole(0.3);
  PeriodicDomain coarse = rasterize_domain(spec, 32);
  PeriodicDomain fine = rasterize_domain(spec, 64);
  for (Index i = 0; i < 32; ++i)
    for (Index j = 0; j < 32; ++j) {
      double x = (static_cast<double>(i) + 0.5) / 32, y = (static_cast<double>(j) + 0.5) / 32;
      double dist_to_boundary = std::abs(std::hypot(x - 0.5, y - 0.5) - 0.3);
      if (dist_to_boundary <= 1.0 / 32) continue;
      // The fine cell containing this center keeps the same membership.
      IVec cf{static_cast<Index>(std::floor(x * 64)), static_cast<Index>(std::floor(y * 64)), 0};
      CHECK(coarse.cell({i, j, 0}) == fine.cell(cf));
    }
}
