#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace condmem {

// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3" (SC 2011).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint32_t kMulA = 0xD2511F53u;
    constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    constexpr std::uint32_t kWeylB = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t pa = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t pb = static_cast<std::uint64_t>(kMulB) * ctr[2];
        ctr = {static_cast<std::uint32_t>(pb >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(pb),
               static_cast<std::uint32_t>(pa >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(pa)};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

/// Independent draw streams are separated by purpose within one trial.
enum class StreamPurpose : std::uint32_t { herald = 0, readout = 1, test = 0xffffu };

/// 53-bit uniform in [0, 1) from two 32-bit words.
inline double to_unit_interval(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based random stream keyed by (seed, trial, purpose).
///
/// Draw k of a stream depends only on the key and k, never on how many
/// other streams were consumed before, so any partition of the trial range
/// into shards reproduces exactly the same numbers.
class CounterStream {
  public:
    CounterStream(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
               static_cast<std::uint32_t>(purpose), 0u} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buffer_[pos_++];
    }

    double uniform() {
        const std::uint32_t lo = next_u32();
        const std::uint32_t hi = next_u32();
        return to_unit_interval(lo, hi);
    }

    /// Standard normal deviate (Box-Muller, second value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint32_t blocks_used() const { return ctr_[3]; }

  private:
    void refill() {
        buffer_ = philox4x32_10(ctr_, key_);
        ++ctr_[3];
        pos_ = 0;
    }

    PhiloxKey key_;
    PhiloxCounter ctr_;
    PhiloxCounter buffer_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline CounterStream seed_stream(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose) {
    return CounterStream(seed, trial, purpose);
}

/// The single herald draw of a trial; first uniform of its herald stream.
inline double herald_uniform(std::uint64_t seed, std::uint64_t trial) {
    const auto out = philox4x32_10(
        {static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
         static_cast<std::uint32_t>(StreamPurpose::herald), 0u},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return to_unit_interval(out[0], out[1]);
}

}  // namespace condmem
