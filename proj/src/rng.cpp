#include "sketchfem/rng.hpp"

namespace sketchfem {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

} // namespace

CounterRng CounterRng::keyed(std::uint64_t seed, std::uint64_t stream) {
    return CounterRng(mix(mix(seed + kGolden) + (stream + 1) * 0xD2B74407B1CE6E93ULL));
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
    return mix(key_ + (counter + 1) * kGolden);
}

double CounterRng::uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
}

} // namespace sketchfem
