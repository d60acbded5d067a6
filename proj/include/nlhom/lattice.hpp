#pragma once

#include <array>
#include <cstdint>
#include <cmath>

namespace nlhom {

using Index = std::int64_t;
using IVec = std::array<Index, 3>;
using Vec = std::array<double, 3>;

inline double dot(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a, int d) { return std::sqrt(dot(a, a, d)); }

// Dense d-dimensional index space, row-major with the last axis fastest.
// Axes beyond dim have extent 1 so the same loops cover d = 1, 2, 3.
struct Lattice {
  int dim = 2;
  IVec n{1, 1, 1};

  Lattice() = default;
  Lattice(int d, IVec ext) : dim(d), n(ext) {
    for (int i = d; i < 3; ++i) n[i] = 1;
  }

  Index size() const { return n[0] * n[1] * n[2]; }

  Index stride(int axis) const {
    Index s = 1;
    for (int i = axis + 1; i < 3; ++i) s *= n[i];
    return s;
  }

  Index flatten(const IVec& i) const { return (i[0] * n[1] + i[1]) * n[2] + i[2]; }

  IVec unflatten(Index f) const {
    IVec i{};
    i[2] = f % n[2];
    f /= n[2];
    i[1] = f % n[1];
    i[0] = f / n[1];
    return i;
  }

  bool in_range(const IVec& i) const {
    for (int a = 0; a < 3; ++a)
      if (i[a] < 0 || i[a] >= n[a]) return false;
    return true;
  }

  // Linear displacement of an integer offset vector.
  Index linear_offset(const IVec& o) const { return (o[0] * n[1] + o[1]) * n[2] + o[2]; }
};

// Index box [lo, hi) such that both i and i+o stay inside the lattice.
struct ClippedBox {
  IVec lo{0, 0, 0};
  IVec hi{1, 1, 1};
  bool empty = false;
};

inline ClippedBox clip_for_offset(const Lattice& lat, const IVec& o) {
  ClippedBox b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = o[a] < 0 ? -o[a] : 0;
    b.hi[a] = o[a] > 0 ? lat.n[a] - o[a] : lat.n[a];
    if (b.lo[a] >= b.hi[a]) b.empty = true;
  }
  return b;
}

// Visit the contiguous rows of an index box. Rows run along axis dim-1,
// which always has stride 1 because trailing axes have extent 1.
// fn(base_flat_index, row_length).
template <typename Fn>
inline void for_rows(const Lattice& lat, int dim, const ClippedBox& b, Fn&& fn) {
  if (b.empty) return;
  if (dim == 1) {
    fn(lat.flatten({b.lo[0], 0, 0}), b.hi[0] - b.lo[0]);
    return;
  }
  if (dim == 2) {
    for (Index i0 = b.lo[0]; i0 < b.hi[0]; ++i0)
      fn(lat.flatten({i0, b.lo[1], 0}), b.hi[1] - b.lo[1]);
    return;
  }
  for (Index i0 = b.lo[0]; i0 < b.hi[0]; ++i0)
    for (Index i1 = b.lo[1]; i1 < b.hi[1]; ++i1)
      fn(lat.flatten({i0, i1, b.lo[2]}), b.hi[2] - b.lo[2]);
}

}  // namespace nlhom
