#include "nlhom/pair_kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>

#include "nlhom/errors.hpp"

namespace nlhom::kernels {

namespace {

RowSum row_sq_scalar(const double* uA, const double* uB, const double* mA,
                     const double* mB, std::size_t len, double g) {
  RowSum r;
  for (std::size_t j = 0; j < len; ++j) {
    double w = mA[j] * mB[j];
    double d = g + uB[j] - uA[j];
    r.sum += w * d * d;
    r.count += w;
  }
  return r;
}

void row_axpy_scalar(double* out, const double* vA, const double* vB,
                     const double* mA, const double* mB, std::size_t len,
                     double c, double g) {
  for (std::size_t j = 0; j < len; ++j)
    out[j] += c * mA[j] * mB[j] * (g + vB[j] - vA[j]);
}

const Backend kScalar{"scalar", row_sq_scalar, row_axpy_scalar};

const Backend* g_active = nullptr;
std::once_flag g_once;

void init_backend() {
  const Backend* chosen = avx2_backend();
  if (chosen == nullptr) chosen = &kScalar;
  if (const char* env = std::getenv("NLHOM_SIMD")) {
    std::string want(env);
    if (want == "scalar") chosen = &kScalar;
    else if (want == "avx2" && avx2_backend() != nullptr) chosen = avx2_backend();
  }
  g_active = chosen;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active_backend() {
  std::call_once(g_once, init_backend);
  return *g_active;
}

void force_backend(const std::string& name) {
  std::call_once(g_once, init_backend);
  if (name == "scalar") {
    g_active = &kScalar;
  } else if (name == "avx2") {
    if (avx2_backend() == nullptr) throw ConfigError("avx2 backend not available on this CPU");
    g_active = avx2_backend();
  } else if (name == "auto") {
    g_active = avx2_backend() != nullptr ? avx2_backend() : &kScalar;
  } else {
    throw ConfigError("unknown simd backend: " + name);
  }
}

RowSum row_pow(const double* uA, const double* uB, const double* mA,
               const double* mB, std::size_t len, double g, double p) {
  RowSum r;
  for (std::size_t j = 0; j < len; ++j) {
    double w = mA[j] * mB[j];
    if (w == 0.0) continue;
    double d = g + uB[j] - uA[j];
    r.sum += w * std::pow(std::abs(d), p);
    r.count += w;
  }
  return r;
}

void row_axpy_pow(double* out, const double* vA, const double* vB,
                  const double* mA, const double* mB, std::size_t len,
                  double c, double g, double p, double delta) {
  for (std::size_t j = 0; j < len; ++j) {
    double w = mA[j] * mB[j];
    if (w == 0.0) continue;
    double d = g + vB[j] - vA[j];
    double mag = delta > 0.0 ? std::sqrt(d * d + delta * delta) : std::abs(d);
    double s;
    if (p == 2.0) {
      s = d;
    } else if (mag == 0.0) {
      s = 0.0;
    } else {
      s = std::pow(mag, p - 2.0) * d;
    }
    out[j] += c * w * s;
  }
}

}  // namespace nlhom::kernels
