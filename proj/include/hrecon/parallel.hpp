#pragma once

#include "hrecon/types.hpp"

#include <functional>

namespace hrecon {

// Worker cap: HRECON_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
int worker_count();

// Runs body(begin, end) over disjoint chunks of [0, n). Each index is touched
// by exactly one worker, so results are independent of the thread count as
// long as body writes only to its own indices.
void parallel_for(Index n, std::function<void(Index, Index)> const &body);

} // namespace hrecon
