#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace ivpvae::diff {

/// Fixed-size pool running index-addressed tasks. `run` blocks until every
/// task has finished; the calling thread participates. Calls made from a
/// worker, or while another caller owns the pool, run inline.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t n_threads) {
    n_threads = std::max<std::size_t>(1, n_threads);
    for (std::size_t i = 1; i < n_threads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.join();
  }

  std::size_t size() const { return workers_.size() + 1; }

  void run(std::size_t n_tasks, const std::function<void(std::size_t)>& task) {
    if (n_tasks == 0) return;
    std::unique_lock submit(submit_mutex_, std::try_to_lock);
    if (workers_.empty() || n_tasks == 1 || in_worker() || !submit.owns_lock()) {
      for (std::size_t i = 0; i < n_tasks; ++i) task(i);
      return;
    }
    auto job = std::make_shared<Job>(task, n_tasks);
    {
      std::lock_guard lock(mutex_);
      job_ = job;
      ++generation_;
    }
    wake_.notify_all();
    drain(*job);
    {
      std::unique_lock lock(job->mutex);
      job->done.wait(lock, [&] { return job->pending == 0; });
    }
    std::lock_guard lock(mutex_);
    job_.reset();
  }

 private:
  struct Job {
    Job(const std::function<void(std::size_t)>& t, std::size_t n) : task(t), n_tasks(n), pending(n) {}
    const std::function<void(std::size_t)>& task;
    const std::size_t n_tasks;
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::condition_variable done;
    std::size_t pending;
  };

  static bool& in_worker() {
    thread_local bool flag = false;
    return flag;
  }

  static void drain(Job& job) {
    const bool was = in_worker();
    in_worker() = true;
    std::size_t finished = 0;
    for (;;) {
      const std::size_t i = job.next.fetch_add(1);
      if (i >= job.n_tasks) break;
      job.task(i);
      ++finished;
    }
    in_worker() = was;
    if (finished > 0) {
      std::lock_guard lock(job.mutex);
      job.pending -= finished;
      if (job.pending == 0) job.done.notify_all();
    }
  }

  void worker_loop() {
    in_worker() = true;
    std::size_t seen = 0;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      if (job) drain(*job);
    }
  }

  std::vector<std::thread> workers_;
  std::mutex submit_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::shared_ptr<Job> job_;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

namespace detail {
struct PoolHolder {
  std::mutex mutex;
  std::size_t threads = 1;
  std::unique_ptr<ThreadPool> pool = std::make_unique<ThreadPool>(1);
};
inline PoolHolder& pool_holder() {
  static PoolHolder holder;
  return holder;
}
}  // namespace detail

/// Resizes the shared kernel pool. Not safe to call while kernels run.
inline void set_num_threads(std::size_t n) {
  auto& h = detail::pool_holder();
  std::lock_guard lock(h.mutex);
  n = std::max<std::size_t>(1, n);
  if (n == h.threads) return;
  h.pool = std::make_unique<ThreadPool>(n);
  h.threads = n;
}

inline std::size_t num_threads() { return detail::pool_holder().threads; }

inline ThreadPool& global_pool() { return *detail::pool_holder().pool; }

/// Splits [begin, end) into contiguous chunks of at least `grain` items and
/// calls body(lo, hi) for each. Chunk boundaries never change what a single
/// index computes, so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, std::size_t grain, Body&& body) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  grain = std::max<std::size_t>(1, grain);
  auto& pool = global_pool();
  const std::size_t chunks = std::min(pool.size(), (n + grain - 1) / grain);
  if (chunks <= 1) {
    body(begin, end);
    return;
  }
  const std::size_t step = (n + chunks - 1) / chunks;
  pool.run(chunks, [&](std::size_t c) {
    const std::size_t lo = begin + c * step;
    const std::size_t hi = std::min(end, lo + step);
    if (lo < hi) body(lo, hi);
  });
}

}  // namespace ivpvae::diff
