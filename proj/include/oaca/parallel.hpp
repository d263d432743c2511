#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace oaca {

inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> n{1};
    return n;
}

/// Worker threads used by parallel loops; 0 means hardware concurrency.
inline void set_threads(unsigned n) {
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    thread_setting().store(n);
}

inline unsigned threads() { return thread_setting().load(); }

/// Work splits into fixed-size blocks whose boundaries depend only on `n` and
/// `block_size`, never on the thread count. Callers that reduce per block and
/// then combine blocks in index order get bit-identical results for any
/// number of threads.
inline constexpr std::size_t kBlockSize = 16384;

inline std::size_t block_count(std::size_t n, std::size_t block_size = kBlockSize) {
    return (n + block_size - 1) / block_size;
}

template <typename F>
void for_each_block(std::size_t n, F&& body, std::size_t block_size = kBlockSize) {
    const std::size_t blocks = block_count(n, block_size);
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads(), blocks));
    auto run = [&](std::size_t b) {
        const std::size_t begin = b * block_size;
        body(b, begin, std::min(n, begin + block_size));
    };
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) run(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (std::size_t b = next++; b < blocks; b = next++) {
                try {
                    run(b);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    void add(const CompensatedSum& other) noexcept {
        add(other.sum_);
        add(other.carry_);
    }
    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace oaca
