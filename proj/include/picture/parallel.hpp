#ifndef PICTURE_PARALLEL_HPP
#define PICTURE_PARALLEL_HPP

#include <cstdlib>
#include <thread>
#include <vector>

namespace picture {

// Worker cap: PICTURE_THREADS environment variable, else all cores.
inline int thread_cap() {
    if (const char* env = std::getenv("PICTURE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(row) for every row in [0, rows). Each row must write disjoint
// output, so the result does not depend on the number of workers.
template <typename F>
void parallel_rows(int rows, F&& fn) {
    const int nt = std::min(thread_cap(), rows);
    if (nt <= 1) {
        for (int r = 0; r < rows; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([=, &fn] {
            for (int r = t; r < rows; r += nt) fn(r);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace picture

#endif
