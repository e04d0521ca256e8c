#pragma once

#include <cstddef>
#include <functional>

namespace ncsol {

// Worker count: hardware concurrency, capped by NCSOL_THREADS when set.
int worker_count();

// Runs body(chunk) for chunk = 0..n_chunks-1 on up to worker_count() threads.
// Callers write per-chunk partials and reduce them in chunk order, so results
// do not depend on the thread count.
void parallel_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& body);

} // namespace ncsol
