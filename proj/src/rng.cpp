#include "mlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace mlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k)
{
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t n_index, std::uint64_t rep_index)
{
    const PhiloxKey key{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32)};
    const PhiloxCounter ctr{static_cast<std::uint32_t>(rep_index), static_cast<std::uint32_t>(rep_index >> 32),
                            static_cast<std::uint32_t>(n_index), 0x5eed5eedu ^ static_cast<std::uint32_t>(n_index >> 32)};
    const auto out = philox4x32_10(ctr, key);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

DrawStream::DrawStream(std::uint64_t seed, std::uint64_t draw_index, std::uint32_t channel)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, channel, static_cast<std::uint32_t>(draw_index), static_cast<std::uint32_t>(draw_index >> 32)}
{
}

std::uint32_t DrawStream::next_u32()
{
    if (used_ == 4) {
        block_ = philox4x32_10(counter_, key_);
        ++counter_[0];
        used_ = 0;
    }
    return block_[used_++];
}

double DrawStream::uniform()
{
    const std::uint64_t a = next_u32() >> 5;  // 27 bits
    const std::uint64_t b = next_u32() >> 6;  // 26 bits
    return (static_cast<double>((a << 26) | b) + 0.5) * 0x1.0p-53;
}

double DrawStream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

}  // namespace mlab
