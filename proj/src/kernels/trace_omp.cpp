// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <exception>

#include "kernels/trace_kernel.hpp"

namespace circuits::detail {

void trace_cells_omp(const TraceProblem& problem, std::span<const Cell* const> cells, TraceState& state, int threads) {
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();
  if (n_threads <= 1 || cells.size() < 2) {
    trace_cells_serial(problem, cells, state);
    return;
  }
  std::vector<TraceState> partial(static_cast<std::size_t>(n_threads), TraceState::empty_for(problem));
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(cells.size());

#pragma omp parallel num_threads(n_threads)
  {
    auto& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        trace_cell(problem, *cells[static_cast<std::size_t>(i)], mine);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& p : partial) state.merge(p);
}

}  // namespace circuits::detail
