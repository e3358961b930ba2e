#include "defocuskit/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace dk {

namespace {

thread_local bool t_in_pool = false;

int read_thread_cap() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("DEFOCUSKIT_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) return cap < hw ? cap : hw;
    }
    return hw;
}

// Index counters and the callable travel together, so a worker that wakes up
// late can only touch the region it actually grabbed.
struct Region {
    const std::function<void(int)>* fn = nullptr;
    std::atomic<int> next{0};
    std::atomic<int> pending{0};
    int limit = 0;
};

// One shared pool, one active region at a time. The submitting thread works
// alongside the workers; regions issued from inside a worker run inline so
// the pool never waits on itself.
class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    int threads() const { return n_threads_; }

    void run(int n, const std::function<void(int)>& fn) {
        if (n <= 0) return;
        if (t_in_pool || n_threads_ == 1 || n == 1) {
            for (int i = 0; i < n; ++i) fn(i);
            return;
        }
        std::lock_guard<std::mutex> serialize(region_mutex_);
        auto region = std::make_shared<Region>();
        region->fn = &fn;
        region->limit = n;
        region->pending.store(n, std::memory_order_relaxed);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            current_ = region;
        }
        cv_.notify_all();

        t_in_pool = true;
        drain(*region);
        t_in_pool = false;

        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [&] { return region->pending.load(std::memory_order_acquire) == 0; });
        current_.reset();
    }

private:
    Pool() : n_threads_(read_thread_cap()) {
        for (int i = 0; i + 1 < n_threads_; ++i) workers_.emplace_back([this] { worker_loop(); });
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    void worker_loop() {
        t_in_pool = true;
        for (;;) {
            std::shared_ptr<Region> region;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [&] { return stop_ || (current_ && current_->next.load() < current_->limit); });
                if (stop_) return;
                region = current_;
            }
            if (region) drain(*region);
        }
    }

    void drain(Region& region) {
        for (;;) {
            const int i = region.next.fetch_add(1, std::memory_order_relaxed);
            if (i >= region.limit) break;
            (*region.fn)(i);
            if (region.pending.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lock(mutex_);
                done_cv_.notify_all();
            }
        }
    }

    const int n_threads_;
    std::vector<std::thread> workers_;
    std::mutex region_mutex_;   // serializes concurrent submitters
    std::mutex mutex_;
    std::condition_variable cv_, done_cv_;
    std::shared_ptr<Region> current_;
    bool stop_ = false;
};

}  // namespace

int max_threads() { return Pool::instance().threads(); }

void parallel_for(int n, const std::function<void(int)>& fn) { Pool::instance().run(n, fn); }

int parallel_chunk_count(int n) {
    if (n <= 0) return 0;
    if (t_in_pool) return 1;
    const int t = max_threads();
    return n < t ? n : t;
}

SerialSection::SerialSection() : previous_(t_in_pool) { t_in_pool = true; }
SerialSection::~SerialSection() { t_in_pool = previous_; }

void parallel_chunks(int n, const std::function<void(int, int, int)>& fn) {
    const int chunks = parallel_chunk_count(n);
    if (chunks <= 1) {
        if (n > 0) fn(0, n, 0);
        return;
    }
    parallel_for(chunks, [&](int c) {
        const int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
        const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
        if (begin < end) fn(begin, end, c);
    });
}

}  // namespace dk
