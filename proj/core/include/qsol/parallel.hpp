#pragma once

#include <cstddef>
#include <functional>

namespace qsol {

/// Number of worker threads used by parallel_for. Defaults to the value of
/// QSOL_THREADS when set, otherwise the hardware concurrency.
int thread_count();

/// Overrides the worker count for the current process (values < 1 reset to
/// the environment default).
void set_thread_count(int threads);

/// Runs body(i) for i in [0, n). Every index is processed exactly once and
/// bodies write to disjoint outputs, so results never depend on the number
/// of threads. Calls made from inside a body run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace qsol
