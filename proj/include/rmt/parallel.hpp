#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace rmt {

// Evaluates fn(0), ..., fn(count - 1) on up to `workers` threads and returns the
// results in index order. If any call throws, the exception of the lowest failing
// index is rethrown after all workers finish.
template <class Fn>
auto parallel_map(std::size_t count, unsigned workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1)));
  if (w <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace rmt
