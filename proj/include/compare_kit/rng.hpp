#pragma once

#include <array>
#include <cstdint>

namespace compare_kit {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A stream is
// fully determined by (seed, stream id); outputs do not depend on how many
// other streams exist or in which order they are consumed.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    // Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    // Unit-rate exponential.
    double exponential();

    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int next_ = 4;
};

}  // namespace compare_kit
