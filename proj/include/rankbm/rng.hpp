// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random numbers. Every Gaussian increment is a pure function
// of (seed, replicate, particle, step), so ensembles reproduce bit-for-bit
// whatever the worker count or evaluation order.
#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace rankbm {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to spread user seeds over the key space.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent sub-streams of one replicate.
enum class StreamDomain : std::uint32_t {
    named_noise = 1,
    ordered_noise = 2,
    initial_state = 3,
};

class NoiseStream {
  public:
    NoiseStream(std::uint64_t seed, std::uint64_t replicate, StreamDomain domain);

    /// Standard normal for (particle, step).
    double normal(std::uint64_t particle, std::uint64_t step) const noexcept;
    /// Fills out[p] = normal(p, step) for p = 0..out.size()-1.
    void fill_normals(std::uint64_t step, std::span<double> out) const noexcept;
    /// Uniform on (0, 1] for (index, step).
    double uniform(std::uint64_t index, std::uint64_t step) const noexcept;

  private:
    std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint64_t lane) const noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint32_t replicate_lo_;
};

}  // namespace rankbm
