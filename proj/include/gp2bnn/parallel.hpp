// Copyright 2025 The gp2bnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GP2BNN_PARALLEL_HPP
#define GP2BNN_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <utility>
#include <vector>

namespace gp2bnn {

// Worker count: GP2BNN_THREADS if set (clamped to >= 1), else hardware threads.
inline int thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("GP2BNN_THREADS")) {
      const int v = std::atoi(env);
      if (v >= 1) return v;
      return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return n;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Each chunk must write only to state owned by its chunk index; the caller
// reduces per-chunk results in index order afterwards.  That makes the
// combined result identical for any worker count.
template <class Fn>
void parallel_chunks_n(std::size_t n, std::size_t chunk_size, int n_workers, Fn&& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  if (n_workers < 1) n_workers = thread_count();
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers = std::min<std::size_t>(n_workers, n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t b = c * chunk_size;
      fn(c, b, std::min(n, b + chunk_size));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const std::size_t b = c * chunk_size;
      fn(c, b, std::min(n, b + chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
  parallel_chunks_n(n, chunk_size, thread_count(), std::forward<Fn>(fn));
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  if (n == 0) return 0;
  if (chunk_size == 0) chunk_size = 1;
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace gp2bnn

#endif  // GP2BNN_PARALLEL_HPP
