#pragma once

#include <cstddef>
#include <functional>

namespace h2n {

// Worker cap from PSEUDOPLATEAU_THREADS (default: hardware concurrency).
std::size_t worker_count();

// Runs body(chunk) for chunk in [0, chunks). The chunk count, not the worker
// count, fixes the work decomposition, so results do not depend on threading.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

}  // namespace h2n
