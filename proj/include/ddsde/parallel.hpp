#pragma once

#include <cstddef>
#include <functional>

namespace ddsde {

// Thread count is a performance knob only. Every parallel_for body writes to
// slots owned by a single index, reductions happen serially afterwards, so
// results are bit-identical for any thread count.
//
// Resolution order: set_thread_count(n > 0), else DDSDE_THREADS, else
// hardware concurrency. set_thread_count(0) restores the default.
void set_thread_count(int n);
int thread_count();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Range flavor for bodies that amortize per-chunk setup. Chunk boundaries
// depend on the thread count; bodies must not couple results across indices.
void parallel_for_ranges(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ddsde
