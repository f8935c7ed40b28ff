// SPDX-License-Identifier: Apache-2.0
#include "rankbm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rankbm {

void validate(const SystemConfig& cfg) {
    if (cfg.K < 1) throw std::invalid_argument("SystemConfig: K must be >= 1");
    const auto k = static_cast<std::size_t>(cfg.K);
    if (cfg.drifts.size() != k) {
        throw std::invalid_argument("SystemConfig: drifts must have K = " + std::to_string(k) +
                                    " entries, got " + std::to_string(cfg.drifts.size()));
    }
    if (cfg.initial.size() != k) {
        throw std::invalid_argument("SystemConfig: initial must have K = " + std::to_string(k) +
                                    " entries, got " + std::to_string(cfg.initial.size()));
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!std::isfinite(cfg.initial[i]) || !std::isfinite(cfg.drifts[i])) {
            throw std::invalid_argument("SystemConfig: non-finite entry at index " +
                                        std::to_string(i));
        }
        if (i > 0 && cfg.initial[i] < cfg.initial[i - 1]) {
            throw std::invalid_argument("SystemConfig: initial positions must be nondecreasing (index " +
                                        std::to_string(i) + ")");
        }
    }
}

std::vector<double> atlas_initial_positions(int K, double delta) {
    if (K < 2) throw std::invalid_argument("atlas_initial_positions: K must be >= 2");
    if (!(delta > 0.0)) throw std::invalid_argument("atlas_initial_positions: delta must be > 0");
    std::vector<double> x(K);
    // ascending index a holds X_(a+1), which is i = K - a from the top
    for (int a = 0; a < K; ++a) x[a] = -(K / delta) * std::log(static_cast<double>(K - a));
    x[K - 1] = 0.0;
    return x;
}

std::vector<double> linear_initial_positions(int count, double c, int N) {
    if (N < 1 || count < N) {
        throw std::invalid_argument("linear_initial_positions: need count >= N >= 1");
    }
    if (!(c > 0.0)) throw std::invalid_argument("linear_initial_positions: c must be > 0");
    std::vector<double> x(count);
    for (int k = 1; k <= count; ++k) x[k - 1] = c * std::max(k - N, 0);
    return x;
}

std::vector<double> lattice_initial_positions(int K, double density) {
    if (K < 1) throw std::invalid_argument("lattice_initial_positions: K must be >= 1");
    if (!(density > 0.0)) throw std::invalid_argument("lattice_initial_positions: density must be > 0");
    std::vector<double> x(K);
    for (int i = 0; i < K; ++i) x[i] = (i - K / 2) / density;
    return x;
}

std::vector<double> poisson_initial_positions(int K, double density, std::uint64_t seed,
                                              std::uint64_t replicate) {
    if (K < 1) throw std::invalid_argument("poisson_initial_positions: K must be >= 1");
    if (!(density > 0.0)) throw std::invalid_argument("poisson_initial_positions: density must be > 0");
    const NoiseStream stream(seed, replicate, StreamDomain::initial_state);
    std::vector<double> x(K, 0.0);
    for (int i = 1; i < K; ++i) x[i] = x[i - 1] - std::log(stream.uniform(i, 0)) / density;
    const double mid = x[K / 2];
    for (double& v : x) v -= mid;
    return x;
}

namespace {

std::size_t check_stride(const TimeGrid& grid, std::size_t stride) {
    if (stride == 0 || grid.steps() % stride != 0) {
        throw std::invalid_argument("record_stride must divide the number of steps");
    }
    return stride;
}

void fill_gaps(OrderedTrajectory& t) {
    const std::size_t K = t.ordered.dim();
    if (K < 2) return;
    GridPath g(t.ordered.grid(), K - 1);
    for (std::size_t k = 0; k < g.points(); ++k) {
        for (std::size_t i = 0; i + 1 < K; ++i) g(k, i) = t.ordered(k, i + 1) - t.ordered(k, i);
    }
    t.gaps = std::move(g);
}

}  // namespace

OrderedTrajectory simulate_named(const SystemConfig& cfg, const SimulationOptions& opt) {
    validate(cfg);
    const auto K = static_cast<std::size_t>(cfg.K);
    const std::size_t stride = check_stride(cfg.grid, opt.record_stride);
    std::vector<std::uint32_t> label(K);
    if (opt.noise_label.empty()) {
        std::iota(label.begin(), label.end(), 0u);
    } else {
        if (opt.noise_label.size() != K) {
            throw std::invalid_argument("simulate_named: noise_label must have K entries");
        }
        label = opt.noise_label;
    }

    const TimeGrid rec_grid = cfg.grid.coarsened(stride);
    OrderedTrajectory out{GridPath(rec_grid, K), std::nullopt, std::nullopt, {}};
    if (opt.record_ranks) out.rank_of.resize(rec_grid.size() * K);

    std::vector<double> x = cfg.initial;
    std::vector<std::uint32_t> order(K);
    std::iota(order.begin(), order.end(), 0u);
    auto before = [&x](std::uint32_t a, std::uint32_t b) {
        return x[a] < x[b] || (x[a] == x[b] && a < b);
    };
    std::stable_sort(order.begin(), order.end(), before);

    auto record = [&](std::size_t slot) {
        auto row = out.ordered.row(slot);
        for (std::size_t j = 0; j < K; ++j) row[j] = x[order[j]];
        if (opt.record_ranks) {
            std::uint32_t* r = out.rank_of.data() + slot * K;
            for (std::size_t j = 0; j < K; ++j) r[order[j]] = static_cast<std::uint32_t>(j);
        }
    };
    record(0);

    const NoiseStream noise(cfg.seed, cfg.replicate, StreamDomain::named_noise);
    const double dt = cfg.grid.dt();
    const double sq = std::sqrt(dt);
    std::vector<double> xi(K);
    std::vector<double> raw(K);
    for (std::size_t step = 0; step < cfg.grid.steps(); ++step) {
        noise.fill_normals(step, raw);
        for (std::size_t p = 0; p < K; ++p) xi[p] = raw[label[p]];
        for (std::size_t j = 0; j < K; ++j) {
            const std::uint32_t p = order[j];
            x[p] += cfg.drifts[j] * dt + sq * xi[p];
        }
        // the previous order is nearly sorted
        for (std::size_t j = 1; j < K; ++j) {
            const std::uint32_t p = order[j];
            std::size_t i = j;
            while (i > 0 && before(p, order[i - 1])) {
                order[i] = order[i - 1];
                --i;
            }
            order[i] = p;
        }
        if ((step + 1) % stride == 0) record((step + 1) / stride);
    }
    fill_gaps(out);
    return out;
}

OrderedTrajectory from_named_paths(const GridPath& named) {
    const std::size_t K = named.dim();
    OrderedTrajectory out{GridPath(named.grid(), K), std::nullopt, std::nullopt, {}};
    out.rank_of.resize(named.points() * K);
    std::vector<std::uint32_t> order(K);
    for (std::size_t k = 0; k < named.points(); ++k) {
        auto row = named.row(k);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&row](std::uint32_t a, std::uint32_t b) { return row[a] < row[b]; });
        for (std::size_t j = 0; j < K; ++j) {
            out.ordered(k, j) = row[order[j]];
            out.rank_of[k * K + order[j]] = static_cast<std::uint32_t>(j);
        }
    }
    fill_gaps(out);
    return out;
}

GridPath brownian_paths(const SystemConfig& cfg) {
    validate(cfg);
    const auto K = static_cast<std::size_t>(cfg.K);
    const NoiseStream noise(cfg.seed, cfg.replicate, StreamDomain::ordered_noise);
    GridPath b(cfg.grid, K);
    const double sq = std::sqrt(cfg.grid.dt());
    std::vector<double> xi(K);
    for (std::size_t step = 0; step < cfg.grid.steps(); ++step) {
        noise.fill_normals(step, xi);
        for (std::size_t i = 0; i < K; ++i) b(step + 1, i) = b(step, i) + sq * xi[i];
    }
    return b;
}

OrderedTrajectory simulate_ordered(const SystemConfig& cfg, const GridPath& beta,
                                   std::optional<double> tol) {
    validate(cfg);
    const auto K = static_cast<std::size_t>(cfg.K);
    if (beta.dim() != K || beta.grid() != cfg.grid) {
        throw std::invalid_argument("simulate_ordered: Brownian paths must be K-dimensional on cfg.grid");
    }
    const TimeGrid& grid = cfg.grid;
    OrderedTrajectory out{GridPath(grid, K), std::nullopt, std::nullopt, {}};

    if (K == 1) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            out.ordered(k, 0) = cfg.initial[0] + cfg.drifts[0] * grid.time(k) + beta(k, 0);
        }
        return out;
    }

    const std::size_t d = K - 1;
    GridPath x(grid, d);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        for (std::size_t i = 0; i < d; ++i) {
            x(k, i) = (cfg.initial[i + 1] - cfg.initial[i]) +
                      (cfg.drifts[i + 1] - cfg.drifts[i]) * t + beta(k, i + 1) - beta(k, i);
        }
    }
    for (std::size_t i = 0; i < d; ++i) x(0, i) = cfg.initial[i + 1] - cfg.initial[i];

    const ReflectionSpec spec = build_rescaling(cfg.K);
    SkorokhodSolution sol = solve_reflected(x, spec, tol);

    for (std::size_t k = 0; k < grid.size(); ++k) {
        double pos = cfg.initial[0] + cfg.drifts[0] * grid.time(k) + beta(k, 0) - 0.5 * sol.y(k, 0);
        out.ordered(k, 0) = pos;
        for (std::size_t i = 0; i < d; ++i) {
            sol.z(k, i) = std::max(sol.z(k, i), 0.0);
            pos += sol.z(k, i);
            out.ordered(k, i + 1) = pos;
        }
    }
    out.gaps = std::move(sol.z);  // clamped at the -tol rounding slack
    out.local_times = std::move(sol.y);
    return out;
}

OrderedTrajectory simulate_ordered(const SystemConfig& cfg, std::optional<double> tol) {
    return simulate_ordered(cfg, brownian_paths(cfg), tol);
}

std::optional<double> first_passage(const std::vector<double>& a, const std::vector<double>& b,
                                    const TimeGrid& grid) {
    if (a.size() != grid.size() || b.size() != grid.size()) {
        throw std::invalid_argument("first_passage: paths must have one value per grid point");
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] >= b[k]) return grid.time(k);
    }
    return std::nullopt;
}

namespace {

void require_ranks(const OrderedTrajectory& t) {
    if (!t.has_ranks()) {
        throw std::invalid_argument("crossing detection needs named-particle rank records");
    }
}

}  // namespace

TauResult detect_tau(const OrderedTrajectory& traj, int N, int m) {
    require_ranks(traj);
    const int K = traj.K();
    if (N < 1 || N > K || m < 0) throw std::invalid_argument("tau query: need 1 <= N <= K, m >= 0");
    const std::size_t n = static_cast<std::size_t>(N);
    std::vector<char> in_lambda(K, 0);
    std::size_t lambda = 0;
    auto absorb = [&](std::size_t k) {
        bool grew = false;
        for (int p = 0; p < K; ++p) {
            if (!in_lambda[p] && traj.named(k, p) <= traj.ordered(k, n - 1)) {
                in_lambda[p] = 1;
                ++lambda;
                grew = true;
            }
        }
        return grew;
    };
    absorb(0);
    if (m == 0) return {0.0, lambda};
    int level = 0;
    const TimeGrid& grid = traj.ordered.grid();
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (absorb(k) && ++level == m) return {grid.time(k), lambda};
    }
    return {std::nullopt, lambda};
}

std::optional<double> detect_crossing(const OrderedTrajectory& traj, const CrossingQuery& q) {
    require_ranks(traj);
    const int K = traj.K();
    const TimeGrid& grid = traj.ordered.grid();
    switch (q.kind) {
        case CrossingKind::sigma: {
            if (q.J < 1 || q.m < 1 || q.J + q.m > K) {
                throw std::invalid_argument("sigma query: need J, m >= 1 and J + m <= K");
            }
            const int last = K - q.J - q.m;  // 0-based particles with top index >= J + m
            const std::size_t slot = static_cast<std::size_t>(K - q.J);
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double level = traj.ordered(k, slot);
                for (int p = 0; p <= last; ++p) {
                    if (traj.named(k, p) >= level) return grid.time(k);
                }
            }
            return std::nullopt;
        }
        case CrossingKind::tilde_sigma: {
            if (q.m < 1 || q.m > K) throw std::invalid_argument("tilde_sigma query: need 1 <= m <= K");
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double low = traj.ordered(k, 0);
                for (int p = q.m - 1; p < K; ++p) {
                    if (traj.named(k, p) <= low) return grid.time(k);
                }
            }
            return std::nullopt;
        }
        case CrossingKind::tau:
            return detect_tau(traj, q.N, q.m).time;
    }
    return std::nullopt;
}

}  // namespace rankbm
