#include "triplewave/common.hpp"

#include <algorithm>

namespace triplewave {

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t nthreads =
      std::min<std::size_t>(std::max(threads, 1), n);
  if (nthreads == 1) {
    body(0, n);
    return;
  }
  // Chunk boundaries depend only on (n, nthreads): chunk c covers
  // [c*n/nthreads, (c+1)*n/nthreads). Workers never share a chunk, so results
  // assembled per-chunk are reproducible across runs.
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  for (std::size_t c = 0; c < nthreads; ++c) {
    const std::size_t lo = c * n / nthreads;
    const std::size_t hi = (c + 1) * n / nthreads;
    workers.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace triplewave
