#pragma once

#include <cstddef>
#include <functional>

namespace prens {

// default worker count: PRENS_THREADS env var, else hardware concurrency
int default_threads();
void set_default_threads(int n);

// run fn(i) for i in [0, count); threads <= 0 means default_threads().
// Exceptions from workers are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

} // namespace prens
