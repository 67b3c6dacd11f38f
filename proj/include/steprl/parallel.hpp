#pragma once

#include <cstddef>
#include <functional>

namespace steprl {

// Runs body(i) for i in [0, n). threads <= 1 is the serial reference path;
// larger values dispatch the same body via OpenMP. Every call site writes
// into per-index slots and reduces serially afterwards, so results are
// identical for any thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

int hardware_threads();

}  // namespace steprl
