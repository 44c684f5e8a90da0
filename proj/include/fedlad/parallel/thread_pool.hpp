// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_PARALLEL_THREAD_POOL_HPP
#define FEDLAD_PARALLEL_THREAD_POOL_HPP

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace fedlad::parallel {

/*
 * Fixed-size pool executing one chunked job at a time. The calling thread
 * takes part in the work, so a pool of `workers` spawns workers - 1 threads.
 * run() blocks until every chunk has finished; the first exception thrown by
 * a chunk is rethrown to the caller.
 */
class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers) : workers_(workers == 0 ? 1 : workers) {
        threads_.reserve(workers_ - 1);
        for (std::size_t i = 1; i < workers_; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        for (auto& t : threads_) {
            t.join();
        }
    }

    std::size_t concurrency() const noexcept { return workers_; }

    template <typename F>
    void run(std::size_t chunks, F&& fn) {
        if (chunks == 0) {
            return;
        }
        if (threads_.empty() || chunks == 1) {
            for (std::size_t i = 0; i < chunks; ++i) {
                fn(i);
            }
            return;
        }
        auto job = std::make_shared<Job>();
        job->fn = std::function<void(std::size_t)>(std::forward<F>(fn));
        job->chunks = chunks;
        {
            std::lock_guard lock(mutex_);
            current_ = job;
            ++generation_;
        }
        wake_.notify_all();

        drain(*job);

        std::unique_lock lock(job->mutex);
        job->done.wait(lock, [&] { return job->finished == job->chunks; });
        lock.unlock();
        {
            std::lock_guard pool_lock(mutex_);
            if (current_ == job) {
                current_.reset();
            }
        }
        if (job->error) {
            std::rethrow_exception(job->error);
        }
    }

private:
    struct Job {
        std::function<void(std::size_t)> fn;
        std::size_t chunks = 0;
        std::atomic<std::size_t> next{0};
        std::mutex mutex;
        std::condition_variable done;
        std::size_t finished = 0;
        std::exception_ptr error;
    };

    static void drain(Job& job) {
        std::size_t completed = 0;
        for (;;) {
            const std::size_t i = job.next.fetch_add(1);
            if (i >= job.chunks) {
                break;
            }
            try {
                job.fn(i);
            } catch (...) {
                std::lock_guard lock(job.mutex);
                if (!job.error) {
                    job.error = std::current_exception();
                }
            }
            ++completed;
        }
        if (completed > 0) {
            std::lock_guard lock(job.mutex);
            job.finished += completed;
            if (job.finished == job.chunks) {
                job.done.notify_all();
            }
        }
    }

    void worker_loop() {
        std::size_t seen = 0;
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) {
                    return;
                }
                seen = generation_;
                job = current_;
            }
            if (job) {
                drain(*job);
            }
        }
    }

    std::size_t workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::shared_ptr<Job> current_;
    std::size_t generation_ = 0;
    bool stopping_ = false;
};

}  // namespace fedlad::parallel

#endif  // FEDLAD_PARALLEL_THREAD_POOL_HPP
