// SPDX-License-Identifier: Apache-2.0
#include "rankbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace rankbm {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

// 53 random bits mapped to (0, 1].
inline double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
        mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t replicate, StreamDomain domain) {
    // The replicate's high word and the domain go into the key, the low word
    // into the counter.
    const std::uint64_t k = splitmix64(
        seed ^ splitmix64((replicate >> 32) ^ (static_cast<std::uint64_t>(domain) << 40)));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    replicate_lo_ = static_cast<std::uint32_t>(replicate);
}

std::array<std::uint32_t, 4> NoiseStream::block(std::uint64_t step,
                                                std::uint64_t lane) const noexcept {
    return philox4x32({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                       static_cast<std::uint32_t>(lane), replicate_lo_},
                      key_);
}

double NoiseStream::normal(std::uint64_t particle, std::uint64_t step) const noexcept {
    // One block feeds a Box-Muller pair shared by particles 2j and 2j+1.
    const auto b = block(step, particle >> 1);
    const double r = std::sqrt(-2.0 * std::log(to_unit_open_closed(b[0], b[1])));
    const double theta = 2.0 * std::numbers::pi * to_unit_open_closed(b[2], b[3]);
    return (particle & 1u) ? r * std::sin(theta) : r * std::cos(theta);
}

void NoiseStream::fill_normals(std::uint64_t step, std::span<double> out) const noexcept {
    const std::size_t n = out.size();
    for (std::size_t p = 0; p < n; p += 2) {
        const auto b = block(step, p >> 1);
        const double r = std::sqrt(-2.0 * std::log(to_unit_open_closed(b[0], b[1])));
        const double theta = 2.0 * std::numbers::pi * to_unit_open_closed(b[2], b[3]);
        out[p] = r * std::cos(theta);
        if (p + 1 < n) out[p + 1] = r * std::sin(theta);
    }
}

double NoiseStream::uniform(std::uint64_t index, std::uint64_t step) const noexcept {
    const auto b = block(step, index);
    return to_unit_open_closed(b[0], b[1]);
}

}  // namespace rankbm
