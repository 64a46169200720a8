#include "hrecon/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hrecon {

int worker_count()
{
  if (char const *env = std::getenv("HRECON_THREADS")) {
    try {
      int const n = std::stoi(env);
      if (n > 0) { return n; }
    } catch (std::exception const &) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(Index n, std::function<void(Index, Index)> const &body)
{
  if (n <= 0) { return; }
  Index const workers = std::min<Index>(worker_count(), n);
  if (workers <= 1 || n < 64) {
    body(0, n);
    return;
  }

  Index const chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_lock;
  for (Index w = 0; w < workers; ++w) {
    Index const lo = w * chunk;
    Index const hi = std::min(n, lo + chunk);
    if (lo >= hi) { break; }
    pool.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) { failure = std::current_exception(); }
      }
    });
  }
  for (auto &t : pool) { t.join(); }
  if (failure) { std::rethrow_exception(failure); }
}

} // namespace hrecon
