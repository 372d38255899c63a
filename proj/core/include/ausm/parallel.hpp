#pragma once

#include <cstddef>
#include <functional>

namespace ausm {

/// Runs body over [0, n) split into contiguous blocks, possibly on several
/// threads. Blocks must be independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body);

/// Caps worker threads process-wide; 0 restores the default.
void set_max_threads(std::size_t n);
std::size_t max_threads();

}  // namespace ausm
