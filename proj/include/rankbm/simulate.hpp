// SPDX-License-Identifier: Apache-2.0
//
// Rank-based particle systems
//     dX_i = sum_j 1{X_i has rank j} delta_j dt + dW_i,   i = 1..K,
// simulated two ways: named particles by Euler-Maruyama, and ordered
// particles through the Skorokhod map of the gap process.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rankbm/core.hpp"
#include "rankbm/rng.hpp"
#include "rankbm/skorokhod.hpp"

namespace rankbm {

struct SystemConfig {
    int K = 1;
    std::vector<double> drifts;   // delta_j by rank from the bottom
    std::vector<double> initial;  // X_i(0), nondecreasing
    TimeGrid grid{1.0, 1};
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const SystemConfig& cfg);

struct OrderedTrajectory {
    GridPath ordered;                       // X_(1) <= ... <= X_(K)
    std::optional<GridPath> gaps;           // X_(i+1) - X_(i), absent for K = 1
    std::optional<GridPath> local_times;    // ordered simulation only
    std::vector<std::uint32_t> rank_of;     // points x K, named simulation only

    int K() const noexcept { return static_cast<int>(ordered.dim()); }
    bool has_ranks() const noexcept { return !rank_of.empty(); }
    /// 0-based rank of particle p at recorded point k.
    std::uint32_t rank(std::size_t k, std::size_t p) const noexcept {
        return rank_of[k * ordered.dim() + p];
    }
    /// Position of named particle p at recorded point k.
    double named(std::size_t k, std::size_t p) const noexcept {
        return ordered(k, rank(k, p));
    }
};

/// X_(K)(0) - X_(K-i+1)(0) = (K / delta) log i with X_(K)(0) = 0, returned in
/// ascending order.
std::vector<double> atlas_initial_positions(int K, double delta);

/// X_k(0) = c * max(k - N, 0), k = 1..count.
std::vector<double> linear_initial_positions(int count, double c, int N);

/// K points with spacing 1/density, centred on 0.
std::vector<double> lattice_initial_positions(int K, double density);

/// K points of a Poisson process of the given density (i.i.d. exponential
/// spacings from the replicate's initial-state stream), centred on the
/// middle particle.
std::vector<double> poisson_initial_positions(int K, double density, std::uint64_t seed,
                                              std::uint64_t replicate);

struct SimulationOptions {
    /// Keep every record_stride-th grid point; must divide the step count.
    std::size_t record_stride = 1;
    bool record_ranks = true;
    /// Particle p draws the noise of stream label noise_label[p] (identity
    /// when empty).
    std::vector<std::uint32_t> noise_label;
};

/// Euler-Maruyama with a stable ranking by (position, index).
OrderedTrajectory simulate_named(const SystemConfig& cfg, const SimulationOptions& opt = {});

/// Sorts explicit named paths (ties by index) into an OrderedTrajectory with
/// rank records.
OrderedTrajectory from_named_paths(const GridPath& named);

/// K independent Brownian paths on cfg.grid from the ordered-noise stream.
GridPath brownian_paths(const SystemConfig& cfg);

/// Ordered dynamics driven by the given Brownian paths (dimension K, zero at
/// t = 0). cfg.initial must be nondecreasing.
OrderedTrajectory simulate_ordered(const SystemConfig& cfg, const GridPath& brownian,
                                   std::optional<double> tol = std::nullopt);
OrderedTrajectory simulate_ordered(const SystemConfig& cfg,
                                   std::optional<double> tol = std::nullopt);

/// First grid time with a(t_k) >= b(t_k).
std::optional<double> first_passage(const std::vector<double>& a, const std::vector<double>& b,
                                    const TimeGrid& grid);

enum class CrossingKind { sigma, tilde_sigma, tau };

struct CrossingQuery {
    CrossingKind kind = CrossingKind::sigma;
    int J = 1;
    int m = 1;
    int N = 1;
};

struct TauResult {
    std::optional<double> time;
    std::size_t lambda_size = 0;  // |Lambda| when the query stopped
};

/// sigma(J, m): a particle starting at top index >= J + m reaches the
/// current J-th highest position.
/// tilde_sigma(m): some X_i with i >= m (1-based) is at the current minimum.
/// tau(N, m): m-th grid time at which a particle outside Lambda reaches one
/// of the N lowest positions; Lambda collects every particle seen there.
/// All three need rank records.
std::optional<double> detect_crossing(const OrderedTrajectory& traj, const CrossingQuery& q);
TauResult detect_tau(const OrderedTrajectory& traj, int N, int m);

}  // namespace rankbm
