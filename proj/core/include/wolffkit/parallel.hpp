#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace wolffkit {

// Worker count used by parallel_for. Results never depend on it: every index
// is computed independently and reductions use a fixed pairwise order.
void set_thread_count(unsigned k);
unsigned thread_count();

// Calls body(i) for i in [0, count). Nested calls run serially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

double pairwise_sum(std::span<const double> v);

}  // namespace wolffkit
