#include "nlhom/parallel.hpp"

#include <atomic>
#include <thread>

namespace nlhom {

namespace {
int g_threads = 0;

int effective_threads() {
  if (g_threads > 0) return g_threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}
}  // namespace

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }

int thread_count() { return effective_threads(); }

void parallel_blocks(std::int64_t nblocks, const std::function<void(std::int64_t)>& fn) {
  int nt = effective_threads();
  if (nt <= 1 || nblocks <= 1) {
    for (std::int64_t b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  if (nt > nblocks) nt = static_cast<int>(nblocks);
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
        if (b >= nblocks) return;
        fn(b);
      }
    });
  }
  for (auto& th : pool) th.join();
}

double deterministic_dot(const double* a, const double* b, std::int64_t n) {
  constexpr std::int64_t kBlock = 4096;
  std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  if (nblocks <= 0) return 0.0;
  std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
  parallel_blocks(nblocks, [&](std::int64_t blk) {
    std::int64_t lo = blk * kBlock;
    std::int64_t hi = lo + kBlock < n ? lo + kBlock : n;
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[static_cast<std::size_t>(blk)] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace nlhom
