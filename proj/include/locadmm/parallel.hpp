#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace locadmm {

/// Fixed pool of workers executing one bulk-synchronous phase at a time.
///
/// `for_each(n, fn)` calls fn(i) for every i in [0, n) and returns only when
/// all calls have finished, which is the phase barrier. Indices are split
/// into contiguous static chunks, and the caller thread works on chunk 0.
/// Each fn(i) must write only to data owned by index i; under that contract
/// results do not depend on the number of threads.
///
/// If any call throws, the exception with the smallest index is rethrown
/// after the barrier.
class BspExecutor {
 public:
  explicit BspExecutor(unsigned threads = 1);
  ~BspExecutor();

  BspExecutor(const BspExecutor&) = delete;
  BspExecutor& operator=(const BspExecutor&) = delete;

  unsigned threads() const { return threads_; }

  void for_each(std::size_t n, const std::function<void(std::size_t)>& fn);

 private:
  struct Failure {
    std::size_t index;
    std::exception_ptr error;
  };

  void worker_loop(unsigned worker);
  void run_chunk(unsigned worker);

  unsigned threads_;
  std::vector<std::thread> workers_;

  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  std::size_t generation_ = 0;
  unsigned pending_ = 0;
  bool stopping_ = false;

  std::size_t phase_size_ = 0;
  const std::function<void(std::size_t)>* phase_fn_ = nullptr;
  std::vector<Failure> failures_;
};

/// Worker count used when the caller does not choose one.
unsigned default_thread_count();

}  // namespace locadmm
