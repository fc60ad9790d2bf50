#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace cnm {

/// Resolves the worker count: explicit request > CNM_THREADS > hardware.
/// A request of 0 means "auto".
unsigned resolve_threads(unsigned requested = 0);

/// Runs fn(first, last) over [0, n) in fixed-size blocks distributed across
/// `threads` workers. Blocks are disjoint, so writes to per-index slots need
/// no synchronization. The block grid is independent of the worker count;
/// callers that reduce per-block partials in block order get results that are
/// bit-identical for every thread setting.
void parallel_blocks(std::size_t n, std::size_t block, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

/// Runs fn(i) for i in [0, n) across workers; fn must only touch slot i state.
void parallel_indices(std::size_t n, unsigned threads,
                      const std::function<void(std::size_t)>& fn);

} // namespace cnm
