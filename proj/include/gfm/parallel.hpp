#pragma once

#include <vector>

// Row-parallel loop helpers. Kernels never throw inside the loop body;
// argument checks happen before the parallel region.

namespace gfm::parallel {

template <class RowFn>
void for_each_row(int rows, RowFn&& fn) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int y = 0; y < rows; ++y) {
    fn(y);
  }
}

template <class IndexFn>
void for_each_index(int count, IndexFn&& fn) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < count; ++i) {
    fn(i);
  }
}

// Per-row partials are summed serially in row order, so the result does not
// depend on the thread count.
template <class T, class RowFn>
T reduce_rows(int rows, T init, RowFn&& row_value) {
  std::vector<T> partial(static_cast<std::size_t>(rows), T{});
  for_each_row(rows, [&](int y) { partial[static_cast<std::size_t>(y)] = row_value(y); });
  T total = init;
  for (const T& p : partial) total += p;
  return total;
}

int max_threads();

}  // namespace gfm::parallel
