#include "fsi/common.hpp"

#include <cstdlib>
#include <thread>

namespace fsi {

int worker_threads() {
  static const int n = [] {
    const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("FSI_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1) return std::min(cap, hw);
    }
    return hw;
  }();
  return n;
}

}  // namespace fsi
