#include "hsp/rng.hpp"

#include <cmath>
#include <numbers>

namespace hsp {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ mix64(stream + 0xD1B54A32D192ED03ULL))) {}

std::uint64_t CounterRng::stream_of(std::string_view name) {
    // FNV-1a, then one mixing round.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return mix64(h);
}

std::uint64_t CounterRng::substream(std::uint64_t stream, std::uint64_t index) {
    return mix64(stream + kGolden * (index + 1));
}

std::uint64_t CounterRng::next_u64() {
    return mix64(key_ + kGolden * ++counter_);
}

double CounterRng::next_uniform() {
    // 53 mantissa bits, shifted into (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace hsp
