#pragma once

#include <cstddef>
#include <string>

namespace nlhom::kernels {

// Row primitives behind every pair sum. A "row" is a contiguous run of nodes
// along the fastest axis; uA/uB (and mA/mB) point at the two pair endpoints,
// i.e. uB = uA + linear_offset. Masks are 0/1 doubles and gate each term, so
// callers pass fields with unmasked entries already zeroed.

struct RowSum {
  double sum = 0.0;
  double count = 0.0;  // number of admissible pairs (sum of mask products)
};

// sum_j mA[j] mB[j] (g + uB[j] - uA[j])^2   (p = 2 fast path)
using RowSqFn = RowSum (*)(const double* uA, const double* uB, const double* mA,
                           const double* mB, std::size_t len, double g);

// out[j] += c mA[j] mB[j] (g + vB[j] - vA[j])
using RowAxpyFn = void (*)(double* out, const double* vA, const double* vB,
                           const double* mA, const double* mB, std::size_t len,
                           double c, double g);

struct Backend {
  const char* name;
  RowSqFn row_sq;
  RowAxpyFn row_axpy;
};

// Runtime-selected backend (AVX2 when the CPU supports it, scalar otherwise).
// NLHOM_SIMD=scalar|avx2 in the environment overrides the choice.
const Backend& active_backend();
const Backend& scalar_backend();
const Backend* avx2_backend();  // nullptr when unsupported on this CPU
// Force a backend by name ("scalar", "avx2", "auto"); throws on unknown or
// unsupported names. Used by the equivalence tests.
void force_backend(const std::string& name);

// General-exponent rows (scalar only; pow dominates, vectorizing buys nothing).
// sum_j mA mB |g + uB - uA|^p
RowSum row_pow(const double* uA, const double* uB, const double* mA,
               const double* mB, std::size_t len, double g, double p);
// out[j] += c mA mB s(g + vB - vA),  s(t) = |t|^{p-1} sgn(t) smoothed by delta
void row_axpy_pow(double* out, const double* vA, const double* vB,
                  const double* mA, const double* mB, std::size_t len,
                  double c, double g, double p, double delta);

}  // namespace nlhom::kernels
