#pragma once

#include <array>
#include <cstdint>

namespace dpdd {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// stream id (high words) and a 64-bit block index (low words). Distinct
/// (seed, stream) pairs give independent sequences, which lets ensemble
/// members draw noise independently of execution order.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0);

    /// Raw bijection: ten rounds applied to counter under key.
    static Block bijection(Block counter, Key key);

    std::uint32_t next_u32();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal via Box-Muller; pairs are cached.
    double normal();

private:
    void refill();

    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    Block buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dpdd
