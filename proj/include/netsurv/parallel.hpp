#pragma once

#include <cstddef>
#include <functional>

namespace netsurv {

/// Worker count: NETSURV_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Results must
/// be written to index-addressed slots so output never depends on scheduling.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace netsurv
