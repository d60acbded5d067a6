#pragma once

#include <cstdint>
#include <vector>

#include "nlhom/geometry.hpp"
#include "nlhom/lattice.hpp"
#include "nlhom/rng.hpp"

namespace nlhom {

// Scalar samples on the nodes (cell centers) of a box region. The mask marks
// nodes of Omega cap eps E; it is stored as 0/1 doubles so the pair kernels
// can use it directly as a multiplicative gate.
struct GridField {
  BoxRegion region;
  std::vector<double> values;
  std::vector<double> mask;

  GridField() = default;
  explicit GridField(const BoxRegion& r)
      : region(r),
        values(static_cast<std::size_t>(r.lattice().size()), 0.0),
        mask(static_cast<std::size_t>(r.lattice().size()), 1.0) {}

  Lattice lattice() const { return region.lattice(); }
  Index masked_count() const {
    Index c = 0;
    for (double m : mask) c += m != 0.0 ? 1 : 0;
    return c;
  }
};

// Mask from the eps-scaled periodic domain by the node-center test.
inline void apply_domain_mask(GridField& f, const PeriodicDomain& dom, double eps) {
  Lattice lat = f.lattice();
  for (Index i = 0; i < lat.size(); ++i) {
    Vec x = f.region.node_center(lat.unflatten(i));
    Vec xs{0, 0, 0};
    for (int a = 0; a < f.region.dim; ++a) xs[a] = x[a] / eps;
    f.mask[static_cast<std::size_t>(i)] = dom.contains_point(xs) ? 1.0 : 0.0;
  }
}

template <typename Fn>
void fill_field(GridField& f, Fn&& fn) {
  Lattice lat = f.lattice();
  for (Index i = 0; i < lat.size(); ++i)
    f.values[static_cast<std::size_t>(i)] = fn(f.region.node_center(lat.unflatten(i)));
}

// Node-wise uniform [-1,1) keyed by (seed, node index).
inline void fill_random(GridField& f, std::uint64_t seed) {
  for (std::size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = uniform_pm1(seed, static_cast<std::uint64_t>(i));
}

}  // namespace nlhom
