#pragma once

#include <cstddef>
#include <vector>

namespace sketchfem {

// Worker cap: min(OpenMP default, SKETCHFEM_THREADS, programmatic override).
int thread_cap();
void set_thread_cap(int n); // n <= 0 clears the override

struct BlockRange {
    std::ptrdiff_t begin;
    std::ptrdiff_t end;
};

// Fixed-size blocks. The partition depends only on (n, block), never on the
// worker count, so blockwise reductions folded in block order give the same
// bits under any schedule.
std::vector<BlockRange> fixed_blocks(std::ptrdiff_t n, std::ptrdiff_t block);

} // namespace sketchfem
