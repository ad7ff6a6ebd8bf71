#include "degdiff/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace degdiff {
namespace {

std::atomic<unsigned> g_threads{0};

unsigned env_threads() {
  if (const char* s = std::getenv("DEGDIFF_THREADS")) {
    try {
      const long v = std::stol(s);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 0;
}

}  // namespace

unsigned thread_count() {
  if (const unsigned n = g_threads.load()) return n;
  if (const unsigned e = env_threads()) return e;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(unsigned n) { g_threads.store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t chunk) {
  if (n == 0) return;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (chunk == 0) chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(workers) * 8));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(chunk);
      if (start >= n || failed.load()) return;
      const std::size_t stop = std::min(n, start + chunk);
      try {
        for (std::size_t i = start; i < stop; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace degdiff
