#pragma once

#include <cstdint>
#include <string_view>

namespace hsp {

/// Counter-based pseudo-random generator ("splitmix64-counter").
///
/// The n-th 64-bit output is a pure function of (seed, stream, n), so
/// substreams can be split off cheaply and any position reached in O(1).
/// All stochastic code in the library draws from this generator; the output
/// sequence is frozen by test vectors and must not change.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Stable 64-bit stream id from a label, for named per-module substreams.
    static std::uint64_t stream_of(std::string_view name);

    /// Mix an extra index into an existing stream id (per-path substreams).
    static std::uint64_t substream(std::uint64_t stream, std::uint64_t index);

    std::uint64_t next_u64();

    /// Uniform draw in the open interval (0, 1); never returns 0 or 1.
    double next_uniform();

    /// Standard normal via Box-Muller; consumes two uniforms per pair and
    /// caches the second variate.
    double next_normal();

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hsp
