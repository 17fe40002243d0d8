#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mst {

enum class Execution { Serial, Parallel };

/// Serial reference: results[i] = task(i) in index order.
template <class Task>
auto map_repetitions_serial(std::size_t count, Task&& task) {
  using Result = std::invoke_result_t<Task&, std::size_t>;
  std::vector<Result> results;
  results.reserve(count);
  for (std::size_t i = 0; i < count; ++i) results.push_back(task(i));
  return results;
}

/// Same contract as the serial version, one independent task per OpenMP
/// iteration. Each task must only touch state it owns (its own kernel and
/// topology). Results land by index, and if tasks throw, the exception of the
/// lowest failing index is rethrown, so the outcome never depends on scheduling.
template <class Task>
auto map_repetitions_parallel(std::size_t count, Task&& task) {
  using Result = std::invoke_result_t<Task&, std::size_t>;
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      slots[idx].emplace(task(idx));
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<Result> results;
  results.reserve(count);
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

template <class Task>
auto map_repetitions(std::size_t count, Execution exec, Task&& task) {
  if (exec == Execution::Parallel && count > 1) return map_repetitions_parallel(count, task);
  return map_repetitions_serial(count, task);
}

}  // namespace mst
