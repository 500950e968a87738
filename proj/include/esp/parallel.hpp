#pragma once

#include <cstddef>
#include <functional>

namespace esp {

// Process-wide worker count used by the parallel loops (default 1).
void set_num_threads(int n);
int num_threads();

// Splits [0, n) into num_threads() contiguous chunks and runs body(begin, end, chunk)
// for each.  Chunk boundaries depend only on n and the thread count, so callers that
// merge per-chunk partials in chunk order get reproducible sums.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body);

} // namespace esp
