#include "ipaths/parallel.hpp"

#include <algorithm>
#include <mutex>
#include <thread>
#include <vector>

namespace ipaths {

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t slots =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(slots);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t slot = 0; slot < slots; ++slot) {
    pool.emplace_back([&, slot] {
      try {
        for (std::size_t i = slot; i < n; i += slots) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ipaths
