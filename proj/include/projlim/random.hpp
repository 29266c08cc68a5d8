#pragma once

#include <array>
#include <cstdint>

namespace projlim {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A stream is identified by (seed, stream id): the seed is the 64-bit key and the
/// stream id occupies the upper half of the 128-bit counter, so streams never overlap.
/// Normals are produced with the Box-Muller transform, two per block.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr const char* name = "philox4x32-10";

    /// One application of the 10-round bijection.
    static Block encrypt(Block counter, Key key);

    Philox4x32(std::uint64_t seed, std::uint64_t stream);

    /// Next raw 128-bit block.
    Block next_block();
    /// Uniform in the open interval (0, 1), 53 bits.
    double uniform();
    /// Standard normal via Box-Muller.
    double normal();

private:
    Key key_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;
    Block buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace projlim
