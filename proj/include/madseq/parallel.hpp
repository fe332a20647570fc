#pragma once

#include <cstddef>
#include <functional>

namespace madseq {

/// Worker cap for parallel loops. Zero means: MADSEQ_THREADS if set, else hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Work units must write
/// only to their own slots; callers reduce in index order afterwards. The first exception
/// thrown by any unit is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace madseq
