#pragma once

#include <cstddef>
#include <functional>

namespace desgrada {

// Index-parallel loop over [0, n). Worker count defaults to the machine's
// cores, capped by the DESGRADA_THREADS environment variable. Each index is
// processed exactly once; callers make results deterministic by writing to
// index-addressed slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Resolved worker cap (>= 1).
unsigned worker_count();

} // namespace desgrada
