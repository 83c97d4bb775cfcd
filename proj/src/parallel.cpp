#include "locadmm/parallel.hpp"

#include <algorithm>

namespace locadmm {

BspExecutor::BspExecutor(unsigned threads) : threads_(std::max(1u, threads)) {
  workers_.reserve(threads_ - 1);
  for (unsigned w = 1; w < threads_; ++w) {
    workers_.emplace_back([this, w] { worker_loop(w); });
  }
}

BspExecutor::~BspExecutor() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void BspExecutor::run_chunk(unsigned worker) {
  const std::size_t n = phase_size_;
  const std::size_t begin = n * worker / threads_;
  const std::size_t end = n * (worker + 1) / threads_;
  for (std::size_t i = begin; i < end; ++i) {
    try {
      (*phase_fn_)(i);
    } catch (...) {
      std::lock_guard lock(mutex_);
      failures_.push_back({i, std::current_exception()});
      return;
    }
  }
}

void BspExecutor::worker_loop(unsigned worker) {
  std::size_t seen = 0;
  while (true) {
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
    }
    run_chunk(worker);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void BspExecutor::for_each(std::size_t n, const std::function<void(std::size_t)>& fn) {
  failures_.clear();
  phase_size_ = n;
  phase_fn_ = &fn;
  if (threads_ > 1) {
    {
      std::lock_guard lock(mutex_);
      pending_ = threads_ - 1;
      ++generation_;
    }
    start_cv_.notify_all();
  }
  run_chunk(0);
  if (threads_ > 1) {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [&] { return pending_ == 0; });
  }
  phase_fn_ = nullptr;
  if (!failures_.empty()) {
    const auto first = std::min_element(
        failures_.begin(), failures_.end(),
        [](const Failure& a, const Failure& b) { return a.index < b.index; });
    std::rethrow_exception(first->error);
  }
}

unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace locadmm
