#include "sdelab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdelab {

namespace {

int g_workers = 0;  // 0 = not yet resolved

int resolve_workers() {
  if (const char* env = std::getenv("SDELAB_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int workers() {
  if (g_workers == 0) g_workers = resolve_workers();
  return g_workers;
}

void set_workers(int n) { g_workers = n >= 1 ? n : 1; }

void for_blocks(std::int64_t n,
                const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const std::int64_t nblocks = block_count(n);
  const int nthreads = static_cast<int>(
      std::min<std::int64_t>(workers(), nblocks));
  if (nthreads <= 1) {
    for (std::int64_t b = 0; b < nblocks; ++b) {
      const std::int64_t lo = b * kParallelBlock;
      fn(lo, std::min(lo + kParallelBlock, n));
    }
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= nblocks) return;
      const std::int64_t lo = b * kParallelBlock;
      try {
        fn(lo, std::min(lo + kParallelBlock, n));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(nthreads - 1);
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace sdelab
