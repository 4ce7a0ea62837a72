#pragma once

#include <cstdlib>
#include <future>
#include <vector>

namespace akconj {

/// worker cap from AKCONJ_THREADS, default 1 (sequential)
inline int thread_budget() {
    static int n = [] {
        const char* s = std::getenv("AKCONJ_THREADS");
        int v = s ? std::atoi(s) : 1;
        if (v < 1) v = 1;
        if (v > 64) v = 64;
        return v;
    }();
    return n;
}

/** Max of fn(i) over [0, n). fn must be pure. Chunking is fixed by n and the
    thread budget, and max is order-independent, so results are deterministic. */
template <class F>
double parallel_max(long long n, F&& fn) {
    double worst = -std::numeric_limits<double>::infinity();
    int threads = thread_budget();
    if (threads <= 1 || n < 512) {
        for (long long i = 0; i < n; ++i) {
            double v = fn(i);
            if (v > worst) worst = v;
        }
        return worst;
    }
    long long chunk = (n + threads - 1) / threads;
    std::vector<std::future<double>> parts;
    for (int t = 0; t < threads; ++t) {
        long long lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        parts.push_back(std::async(std::launch::async, [lo, hi, &fn] {
            double w = -std::numeric_limits<double>::infinity();
            for (long long i = lo; i < hi; ++i) {
                double v = fn(i);
                if (v > w) w = v;
            }
            return w;
        }));
    }
    for (auto& p : parts) worst = std::max(worst, p.get());
    return worst;
}

} // namespace akconj
