#pragma once

#include <cstddef>
#include <functional>

namespace rxnkit {

/// Runs body(i) for i in [0, n) on up to `jobs` threads (0 = hardware
/// concurrency). Exceptions from body are rethrown after all workers join.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace rxnkit
