#include "slr/threads.hpp"

#include <atomic>
#include <cstdlib>

namespace slr::threads {

namespace {

std::atomic<int> g_count{0};

int from_env() {
    const char* env = std::getenv("SLR_THREADS");
    if (env) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

}  // namespace

int count() {
    int n = g_count.load(std::memory_order_relaxed);
    if (n > 0) return n;
    n = from_env();
    g_count.store(n, std::memory_order_relaxed);
    return n;
}

void set_count(int n) {
    if (n > 0) g_count.store(n, std::memory_order_relaxed);
}

}  // namespace slr::threads
