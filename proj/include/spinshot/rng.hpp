#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace spinshot {

/// SplitMix64 step; used only to expand seeds into generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Identifies one deterministic random stream: stream `stream_id` of the
/// run seeded with `master_seed`. Streams are independent of execution
/// order, so a simulation sharded over any number of threads produces the
/// same result as a serial run.
struct RngContract {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

/// xoshiro256++ generator, state derived from (master_seed, stream_id).
class StreamRng {
  public:
    explicit StreamRng(RngContract c) : StreamRng(c.master_seed, c.stream_id) {}

    StreamRng(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::uint64_t x = master_seed ^ (stream_id * 0xD2B74407B1CE6E93ULL) ^ 0x8D1F5A2C3E7B9D01ULL;
        for (auto& w : state_) {
            w = splitmix64_next(x);
        }
        // All-zero state is invalid for xoshiro; splitmix cannot produce
        // four zero words from distinct counters, but guard anyway.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
            state_[0] = 1;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Bernoulli trial. p outside [0,1] saturates.
    bool next_bernoulli(double p) { return next_double() < p; }

    /// Exponential waiting time with the given mean. An infinite or
    /// non-positive-rate mean never fires.
    double next_exponential(double mean) {
        if (!(mean < std::numeric_limits<double>::infinity()) || mean <= 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        return -mean * std::log1p(-next_double());
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace spinshot
