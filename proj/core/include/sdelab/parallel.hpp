#pragma once

#include <cstdint>
#include <functional>

namespace sdelab {

// Fixed block size for all parallel reductions. Results are reduced in block
// order, so they do not depend on which worker processed which block.
inline constexpr std::int64_t kParallelBlock = 4096;

// Worker count: SDELAB_WORKERS environment variable if set, otherwise the
// hardware concurrency. set_workers overrides both (used by tests).
int workers();
void set_workers(int n);

inline std::int64_t block_count(std::int64_t n) {
  return (n + kParallelBlock - 1) / kParallelBlock;
}

// Runs fn(begin, end) over [0, n) split into kParallelBlock-sized blocks.
// Blocks are claimed dynamically; each block runs on exactly one thread.
void for_blocks(std::int64_t n,
                const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace sdelab
