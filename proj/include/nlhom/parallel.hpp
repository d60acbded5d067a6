#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace nlhom {

// Global worker count for the block helpers below. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(block) for block = 0..nblocks-1 on worker threads. The block
// decomposition is fixed by the caller, so any reduction that combines
// per-block partials in block order is independent of the thread count.
void parallel_blocks(std::int64_t nblocks, const std::function<void(std::int64_t)>& fn);

// Dot product with a fixed 4096-element block reduction (schedule independent).
double deterministic_dot(const double* a, const double* b, std::int64_t n);

}  // namespace nlhom
