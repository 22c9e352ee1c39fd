#include <algorithm>
#include <thread>

namespace fsi {

template <typename F>
void parallel_for(Index n, F&& f) {
  const int nt = worker_threads();
  if (nt <= 1 || n < 4096) {
    f(Index{0}, n);
    return;
  }
  const Index chunk = (n + nt - 1) / nt;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const Index b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&f, b, e] { f(b, e); });
  }
}

}  // namespace fsi
