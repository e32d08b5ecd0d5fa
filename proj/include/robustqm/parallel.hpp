#pragma once

#include <cstddef>
#include <functional>

namespace robustqm {

/// Worker cap from ROBUSTQM_THREADS, falling back to hardware concurrency.
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks, one per worker, and runs
/// body(chunk_index, begin, end). Chunk boundaries depend only on n and the
/// worker count; callers must merge results order-independently.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                     std::size_t workers = worker_count());

} // namespace robustqm
