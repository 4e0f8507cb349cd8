#include "mflab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mflab {

namespace {
std::atomic<int> g_override{0};
}

int worker_count() {
  int v = g_override.load();
  if (v > 0) return v;
  if (const char* env = std::getenv("MFLAB_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  if (n <= 0) return;
  std::int64_t w = std::min<std::int64_t>(worker_count(), n);
  if (w <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(w));
  for (std::int64_t t = 0; t < w; ++t) {
    std::int64_t lo = n * t / w;
    std::int64_t hi = n * (t + 1) / w;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (std::int64_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}
