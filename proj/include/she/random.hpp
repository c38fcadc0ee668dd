#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace she {

// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

// Counter-based Gaussian stream of one path. The k-th draw for (step, tag) is a
// pure function of (seed, path, step, tag, k), so paths and steps may be
// generated in any order and on any thread.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t path() const noexcept { return path_; }

    RandomStream substream(std::uint64_t path) const { return {seed_, path}; }

    // Fills `out` with independent standard normals via Box-Muller, two per block.
    void gaussians(std::uint64_t step, std::uint32_t tag, Eigen::Ref<Eigen::ArrayXd> out) const {
        const Eigen::Index n = out.size();
        for (Eigen::Index k = 0; k < n; k += 2) {
            const auto x = block(static_cast<std::uint64_t>(k / 2), step, tag);
            const double u1 = unit_open_left(x[0], x[1]);
            const double u2 = unit_open_left(x[2], x[3]);
            const double r = std::sqrt(-2 * std::log(u1));
            const double theta = 2 * std::numbers::pi * u2;
            out[k] = r * std::cos(theta);
            if (k + 1 < n) out[k + 1] = r * std::sin(theta);
        }
    }

    // Uniforms in (0, 1].
    void uniforms(std::uint64_t step, std::uint32_t tag, Eigen::Ref<Eigen::ArrayXd> out) const {
        const Eigen::Index n = out.size();
        for (Eigen::Index k = 0; k < n; k += 2) {
            const auto x = block(static_cast<std::uint64_t>(k / 2), step, tag);
            out[k] = unit_open_left(x[0], x[1]);
            if (k + 1 < n) out[k + 1] = unit_open_left(x[2], x[3]);
        }
    }

    // Counter (index, step, path, tag); injective while index, step and path stay below 2^32.
    std::array<std::uint32_t, 4> block(std::uint64_t index, std::uint64_t step, std::uint32_t tag) const {
        return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(step),
                           static_cast<std::uint32_t>(path_), tag},
                          {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    }

private:
    static double unit_open_left(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 1) * 0x1.0p-53;
    }

    std::uint64_t seed_;
    std::uint64_t path_;
};

}  // namespace she
