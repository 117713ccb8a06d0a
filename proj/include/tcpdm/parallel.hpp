#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tcpdm {

/// Process-wide worker count used by the patch and training loops.
/// 0 means std::thread::hardware_concurrency().
inline int& thread_count_setting() {
  static int n = 0;
  return n;
}

inline int effective_threads() {
  int n = thread_count_setting();
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; callers
/// write to disjoint slots and reduce afterwards in index order.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(effective_threads()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tcpdm

namespace tcpdm {

/// Keeps large scratch buffers on the heap instead of fresh mmap pages.
/// The network allocates many short-lived 100 KB+ matrices per step and the
/// default glibc policy returns each one to the kernel. Call once from main.
void tune_allocator();

}  // namespace tcpdm
