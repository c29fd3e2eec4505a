#include "hbnet/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace hbnet {

namespace {

class Pool {
  public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void set_threads(int n) {
        std::unique_lock lock(mu_);
        wanted_ = n;
    }

    int threads() {
        std::unique_lock lock(mu_);
        return resolve(wanted_);
    }

    void run(i64 n, const std::function<void(i64, i64)>& body) {
        if (n <= 0) return;
        thread_local bool inside = false;
        int workers;
        {
            std::unique_lock lock(mu_);
            workers = resolve(wanted_);
        }
        if (inside || workers == 1 || n == 1) {
            body(0, n);
            return;
        }
        inside = true;
        // Chunk boundaries depend only on (n, workers); each worker owns a
        // contiguous range. Every pool thread wakes per job and reports done
        // even when its slot is beyond the active worker count.
        std::unique_lock lock(mu_);
        ensure_workers(workers - 1);
        job_body_ = &body;
        job_n_ = n;
        job_workers_ = workers;
        pending_ = static_cast<int>(threads_.size());
        ++generation_;
        lock.unlock();
        cv_start_.notify_all();

        run_range(0, n, workers, body);  // slot 0 = calling thread

        lock.lock();
        cv_done_.wait(lock, [this] { return pending_ == 0; });
        job_body_ = nullptr;
        lock.unlock();
        inside = false;
    }

  private:
    Pool() = default;

    ~Pool() {
        {
            std::unique_lock lock(mu_);
            stop_ = true;
        }
        cv_start_.notify_all();
        for (auto& t : threads_) t.join();
    }

    static int resolve(int wanted) {
        if (wanted > 0) return wanted;
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }

    void ensure_workers(int count) {
        while (static_cast<int>(threads_.size()) < count) {
            int slot = static_cast<int>(threads_.size()) + 1;
            threads_.emplace_back([this, slot] { worker_loop(slot); });
        }
    }

    static void run_range(int slot, i64 n, int workers, const std::function<void(i64, i64)>& body) {
        i64 chunk = (n + workers - 1) / workers;
        i64 begin = chunk * slot;
        i64 end = begin + chunk < n ? begin + chunk : n;
        if (begin < end) body(begin, end);
    }

    void worker_loop(int slot) {
        u64 seen = 0;
        for (;;) {
            std::unique_lock lock(mu_);
            cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            auto* body = job_body_;
            i64 n = job_n_;
            int workers = job_workers_;
            lock.unlock();
            if (body != nullptr && slot < workers) run_range(slot, n, workers, *body);
            lock.lock();
            if (--pending_ == 0) cv_done_.notify_all();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_start_;
    std::condition_variable cv_done_;
    std::vector<std::thread> threads_;
    const std::function<void(i64, i64)>* job_body_ = nullptr;
    i64 job_n_ = 0;
    int job_workers_ = 1;
    int pending_ = 0;
    u64 generation_ = 0;
    int wanted_ = 0;
    bool stop_ = false;
};

}  // namespace

void parallel_for(i64 n, const std::function<void(i64, i64)>& body) { Pool::instance().run(n, body); }

void set_num_threads(int n) { Pool::instance().set_threads(n); }

int num_threads() { return Pool::instance().threads(); }

}  // namespace hbnet
