#pragma once

#include <cstdint>
#include <string_view>

namespace oscnet {

/// Counter-based random stream. Each draw is a pure function of
/// (seed, stream name, draw index), so a run is reproducible regardless of
/// how many other streams exist or in which order they are consumed.
///
/// The mixing function is the SplitMix64 finalizer applied to
/// key + index * golden-gamma.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    double uniform();                         // [0, 1), 53-bit resolution
    double uniform(double lo, double hi);     // [lo, hi)
    double normal(double mean, double sd);    // Box-Muller, two draws per call
    bool bernoulli(double p);                 // one draw

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace oscnet
