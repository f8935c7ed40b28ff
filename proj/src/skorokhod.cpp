// SPDX-License-Identifier: Apache-2.0
#include "rankbm/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rankbm {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix nearest_neighbor_q(int d) {
    if (d < 1) throw std::invalid_argument("nearest_neighbor_q: d must be >= 1");
    const auto n = static_cast<std::size_t>(d);
    Matrix q(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        q(i, i + 1) = 0.5;
        q(i + 1, i) = 0.5;
    }
    return q;
}

double cs_norm(const Matrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) col += std::abs(m(i, j));
        best = std::max(best, col);
    }
    return best;
}

WeightFunction::WeightFunction(int K) : K_(K) {
    if (K < 4) throw std::invalid_argument("WeightFunction: requires K >= 4");
    const double k = K;
    knot_ = 1.0 / k;
    outer_slope_ = -(k - 2.0) * k;         // K -> 2 over [0, 1/K]
    inner_slope_ = -4.0 * k / (k - 2.0);   // 2 -> 0 over [1/K, 1/2]
}

double WeightFunction::v_left(double x) const noexcept {
    if (x <= knot_) return K_ + outer_slope_ * x;
    return 2.0 + inner_slope_ * (x - knot_);
}

double WeightFunction::w_left(double x) const noexcept {
    if (x <= knot_) return K_ * x + 0.5 * outer_slope_ * x * x;
    const double h = x - knot_;
    const double w_knot = K_ * knot_ + 0.5 * outer_slope_ * knot_ * knot_;
    return w_knot + 2.0 * h + 0.5 * inner_slope_ * h * h;
}

double WeightFunction::v(double x) const {
    if (x < 0.0 || x > 1.0) throw std::domain_error("WeightFunction::v: x outside [0, 1]");
    return x <= 0.5 ? v_left(x) : -v_left(1.0 - x);
}

double WeightFunction::w(double x) const {
    if (x < 0.0 || x > 1.0) throw std::domain_error("WeightFunction::w: x outside [0, 1]");
    // v(x) = -v(1-x) makes w symmetric about 1/2.
    return x <= 0.5 ? w_left(x) : w_left(1.0 - x);
}

double rescaled_cs_norm(const WeightFunction& w) {
    const double k = w.K();
    double best = 0.0;
    for (int l = 1; l < w.K(); ++l) {
        const double num = w.w((l - 1) / k) + w.w((l + 1) / k);
        best = std::max(best, num / (2.0 * w.w(l / k)));
    }
    return best;
}

ReflectionSpec make_reflection_spec(Matrix q, std::vector<double> d) {
    const std::size_t n = q.size();
    if (n == 0) throw std::invalid_argument("make_reflection_spec: empty matrix");
    if (d.size() != n) throw std::invalid_argument("make_reflection_spec: D has wrong size");
    for (std::size_t i = 0; i < n; ++i) {
        if (q(i, i) != 0.0) throw std::invalid_argument("make_reflection_spec: Q diagonal must be zero");
        if (!(d[i] > 0.0)) throw std::invalid_argument("make_reflection_spec: D must be positive");
        for (std::size_t j = 0; j < n; ++j) {
            if (q(i, j) < 0.0) throw std::invalid_argument("make_reflection_spec: Q must be nonnegative");
        }
    }

    ReflectionSpec spec;
    spec.dim = n;
    spec.r = Matrix(n);
    spec.r_columns.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double rij = d[i] * q(i, j) / d[j];
            spec.r(i, j) = rij;
            if (rij != 0.0) spec.r_columns[j].push_back({i, rij});
        }
    }
    spec.cs_norm_r = cs_norm(spec.r);
    if (!(spec.cs_norm_r < 1.0)) {
        throw std::invalid_argument("make_reflection_spec: ||D Q D^-1||_cs = " +
                                    std::to_string(spec.cs_norm_r) + " is not < 1");
    }
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    spec.rho = *hi / *lo;
    spec.q = std::move(q);
    spec.d = std::move(d);
    spec.budget = spec.exact_ratio();
    return spec;
}

ReflectionSpec build_rescaling(int K) {
    if (K < 2) throw std::invalid_argument("build_rescaling: K must be >= 2");
    const int d = K - 1;
    if (K <= 3) {
        return make_reflection_spec(nearest_neighbor_q(d), std::vector<double>(d, 1.0));
    }
    const WeightFunction w(K);
    std::vector<double> diag(d);
    for (int i = 1; i <= d; ++i) diag[i - 1] = w.w(static_cast<double>(i) / K);
    ReflectionSpec spec = make_reflection_spec(nearest_neighbor_q(d), std::move(diag));
    const double k = K;
    spec.budget = 2.0 * k * k * (k - 2.0) / (k + 2.0);
    return spec;
}

double default_tolerance(const GridPath& x) { return 1e-12 * (1.0 + norm_tmax(x)); }

namespace {

void check_solver_input(const GridPath& x, const ReflectionSpec& spec, double tol) {
    if (x.dim() != spec.dim) {
        throw std::invalid_argument("Skorokhod solver: path dimension " + std::to_string(x.dim()) +
                                    " does not match reflection dimension " +
                                    std::to_string(spec.dim));
    }
    for (std::size_t i = 0; i < x.dim(); ++i) {
        if (x(0, i) < 0.0) {
            throw std::invalid_argument("Skorokhod solver: x_" + std::to_string(i + 1) +
                                        "(0) < 0");
        }
    }
    if (!(tol > 0.0)) throw std::invalid_argument("Skorokhod solver: tol must be positive");
}

constexpr std::size_t kIterationMargin = 16;

}  // namespace

SkorokhodSolution solve_local_time(const GridPath& x, const ReflectionSpec& spec,
                                   std::optional<double> tol_opt) {
    const double tol = tol_opt.value_or(default_tolerance(x));
    check_solver_input(x, spec, tol);

    const std::size_t n = x.points();
    const std::size_t d = x.dim();

    std::vector<double> xs(x.values().begin(), x.values().end());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < d; ++j) xs[k * d + j] /= spec.d[j];
    }

    std::vector<double> prev(n * d, 0.0);
    std::vector<double> next(n * d, 0.0);
    std::vector<double> running(d);

    SkorokhodSolution sol{x, GridPath(x.grid(), d), GridPath(x.grid(), d), 0, 0.0, {}};
    std::size_t cap = 0;
    for (;;) {
        std::fill(running.begin(), running.end(), 0.0);
        double gap = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double* yk = prev.data() + k * d;
            const double* xk = xs.data() + k * d;
            double* out = next.data() + k * d;
            for (std::size_t j = 0; j < d; ++j) {
                double cand = -xk[j];
                for (const auto& e : spec.r_columns[j]) cand += yk[e.row] * e.value;
                running[j] = std::max(running[j], cand);
                out[j] = running[j];
                gap = std::max(gap, std::abs(out[j] - yk[j]));
            }
        }
        prev.swap(next);
        ++sol.iterations;
        sol.gaps.push_back(gap);
        sol.residual = gap;
        if (gap <= tol) break;

        if (sol.iterations == 1) {
            // gap_k <= cs^(k-1) gap_1 bounds the number of sweeps needed.
            const double c = spec.cs_norm_r;
            const double needed =
                c > 0.0 ? std::ceil(std::log(tol / gap) / std::log(c)) + 1.0 : 1.0;
            cap = static_cast<std::size_t>(needed) + kIterationMargin;
        }
        if (sol.iterations >= cap) {
            throw std::runtime_error("Skorokhod solver: no convergence after " +
                                     std::to_string(sol.iterations) +
                                     " iterations (gap " + std::to_string(gap) + ")");
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < d; ++j) sol.y(k, j) = prev[k * d + j] * spec.d[j];
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            double push = sol.y(k, j);
            for (std::size_t i = 0; i < d; ++i) {
                if (spec.q(i, j) != 0.0) push -= spec.q(i, j) * sol.y(k, i);
            }
            sol.z(k, j) = x(k, j) + push;
        }
    }
    return sol;
}

SkorokhodSolution solve_reflected(const GridPath& x, const ReflectionSpec& spec,
                                  std::optional<double> tol) {
    return solve_local_time(x, spec, tol);
}

GridPath solve_local_time_1d(const GridPath& x) {
    if (x.dim() != 1) throw std::invalid_argument("solve_local_time_1d: path must be one-dimensional");
    if (x(0, 0) < 0.0) throw std::invalid_argument("solve_local_time_1d: x(0) < 0");
    GridPath y(x.grid(), 1);
    double running = 0.0;
    for (std::size_t k = 0; k < x.points(); ++k) {
        running = std::max(running, -x(k, 0));
        y(k, 0) = running;
    }
    return y;
}

LipschitzBudget lipschitz_budget(int K) {
    if (K < 2) throw std::invalid_argument("lipschitz_budget: K must be >= 2");
    const ReflectionSpec spec = build_rescaling(K);
    const double m = K - 1;
    return {spec.budget, 2.0 * std::pow(m, 2.5), 5.0 * m * m, spec.exact_ratio()};
}

InvariantReport check_invariants(const GridPath& x, const ReflectionSpec& spec,
                                 const SkorokhodSolution& sol, double tol) {
    InvariantReport r;
    const double eps_c = 10.0 * spec.budget * tol;
    const double round_y = 1e-14 * (1.0 + norm_tmax(sol.y));
    for (std::size_t i = 0; i < spec.dim; ++i) {
        if (sol.y(0, i) != 0.0) r.monotone = false;
        double off = 0.0;
        for (std::size_t k = 0; k < x.points(); ++k) {
            if (sol.z(k, i) < -tol) r.nonnegative = false;
            double a = x(k, i) + sol.y(k, i);
            for (const auto& e : spec.r_columns[i]) a -= spec.q(e.row, i) * sol.y(k, e.row);
            if (std::abs(sol.z(k, i) - a) > round_y) r.assembled = false;
            if (k > 0) {
                if (sol.y(k, i) < sol.y(k - 1, i)) r.monotone = false;
                if (sol.z(k, i) > eps_c) off += sol.y(k, i) - sol.y(k - 1, i);
            }
        }
        const double total = sol.y(x.points() - 1, i);
        if (off > 1e-6 * total) r.complementary = false;
        if (total > 0.0) r.off_boundary = std::max(r.off_boundary, off / total);
    }
    const double rounding = 1e-14 * (1.0 + norm_tmax(x));
    for (std::size_t it = 1; it < sol.gaps.size(); ++it) {
        if (sol.gaps[it] > spec.cs_norm_r * sol.gaps[it - 1] + rounding) r.contracting = false;
    }
    r.converged = sol.residual <= tol;
    return r;
}

}  // namespace rankbm
