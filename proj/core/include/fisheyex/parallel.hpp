#pragma once

#include <cstddef>
#include <functional>

namespace fisheyex {

/// Process-wide worker cap. 1 selects the sequential reference path.
void set_thread_count(int threads);
int thread_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker; callers that reduce results must do so in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fisheyex
