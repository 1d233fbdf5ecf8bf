#pragma once

#include <cstdint>

namespace sketchfem {

// Counter-based generator built on the splitmix64 finalizer: output t is a
// pure function of (key, t), so a stream can be evaluated out of order and
// across threads with identical results on every platform.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    // Independent stream derived from (seed, stream id), e.g. one per query.
    static CounterRng keyed(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t bits(std::uint64_t counter) const;

    // Uniform in [0, 1), 53-bit resolution.
    double uniform(std::uint64_t counter) const;
    double uniform(std::uint64_t counter, double lo, double hi) const;

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

} // namespace sketchfem
