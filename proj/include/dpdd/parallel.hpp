#pragma once

#include <cstddef>
#include <functional>

namespace dpdd {

/// Upper bound on worker threads used by the library; 0 selects hardware concurrency.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs body(begin, end) over [0, n) split into fixed-size chunks.
///
/// Chunk boundaries depend only on n and chunk, never on the thread count, so
/// per-chunk partial results combined in chunk order are reproducible.
void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) {
    return chunk == 0 ? 0 : (n + chunk - 1) / chunk;
}

} // namespace dpdd
