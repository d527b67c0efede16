#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace usdr {

// Process-wide worker count for parallel_for (0 = hardware concurrency).
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [begin, end) on up to thread_count() threads.
// Work is split into contiguous chunks; the first thrown exception is
// rethrown on the calling thread.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

} // namespace usdr
