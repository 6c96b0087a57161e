#pragma once

#include <array>
#include <cstdint>

namespace mlab {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// A block is a pure function of (counter, key); there is no hidden state.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

// Seed mixing used by the harness: one 64-bit seed per (base seed, n index,
// replication index). Pure function; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t n_index, std::uint64_t rep_index);

// Stream of variates for a single draw. Every observation i of a dataset owns
// its own stream keyed by (seed, i, channel), so rejection loops of one draw
// cannot shift the variates of another.
class DrawStream {
public:
    DrawStream(std::uint64_t seed, std::uint64_t draw_index, std::uint32_t channel = 0);

    std::uint32_t next_u32();
    // Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

private:
    PhiloxKey key_;
    PhiloxCounter counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Standard channels so that different uses of a draw never overlap.
namespace channel {
inline constexpr std::uint32_t manifold = 0;
inline constexpr std::uint32_t clutter = 1;
inline constexpr std::uint32_t noise = 2;
inline constexpr std::uint32_t aux = 3;
}  // namespace channel

}  // namespace mlab
