#pragma once

#include <cstddef>
#include <functional>

namespace ipaths {

// Runs fn(i) for i in [0, n). Work is assigned to fixed slots (i % threads),
// so each item always lands in the same slot regardless of scheduling; the
// caller keeps per-item output buffers and the result is identical for any
// thread count. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace ipaths
