#pragma once

#include <cstddef>
#include <functional>

namespace pepf {

/// Upper bound on worker threads used by ensemble fits. 0 selects
/// std::thread::hardware_concurrency(). Results never depend on this value:
/// every task owns its RNG stream and writes to its own output slot.
void set_max_threads(unsigned threads);
unsigned max_threads();

/// Runs task(i) for i in [0, count). Tasks must be independent. Calls made
/// from inside a task run serially on the calling worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

} // namespace pepf
