#include "sketchfem/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sketchfem {
namespace {

std::atomic<int> g_override{0};

int env_cap() {
    static const int cap = [] {
        const char* v = std::getenv("SKETCHFEM_THREADS");
        if (!v) return 0;
        const int n = std::atoi(v);
        return n > 0 ? n : 0;
    }();
    return cap;
}

} // namespace

int thread_cap() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const int e = env_cap(); e > 0) n = std::min(n, e);
    if (const int o = g_override.load(); o > 0) n = std::min(n, o);
    return std::max(n, 1);
}

void set_thread_cap(int n) {
    g_override.store(n > 0 ? n : 0);
}

std::vector<BlockRange> fixed_blocks(std::ptrdiff_t n, std::ptrdiff_t block) {
    std::vector<BlockRange> out;
    if (n <= 0) return out;
    block = std::max<std::ptrdiff_t>(block, 1);
    out.reserve(static_cast<size_t>((n + block - 1) / block));
    for (std::ptrdiff_t b = 0; b < n; b += block)
        out.push_back({b, std::min(b + block, n)});
    return out;
}

} // namespace sketchfem
