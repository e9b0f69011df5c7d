#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace qpt {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots; the lowest-index exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Pairwise (tree) sum over [first, last); the association order depends only
/// on the element count.
template <typename T>
T pairwise_sum(const std::vector<T>& items, std::size_t first, std::size_t last) {
  if (last - first == 1) return items[first];
  const std::size_t mid = first + (last - first) / 2;
  T left = pairwise_sum(items, first, mid);
  left += pairwise_sum(items, mid, last);
  return left;
}

template <typename T>
T pairwise_sum(const std::vector<T>& items) {
  return pairwise_sum(items, 0, items.size());
}

}  // namespace qpt
