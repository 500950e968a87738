#include "esp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace esp {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body) {
    const int t = num_threads();
    if (t <= 1 || n < 2) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    pool.reserve(t);
    for (int c = 0; c < t; ++c) {
        const std::size_t b = n * c / t, e = n * (c + 1) / t;
        pool.emplace_back([=, &body, &errors] {
            try {
                body(b, e, c);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace esp
