// SPDX-License-Identifier: Apache-2.0
//
// Skorokhod problem in the positive orthant for a nonnegative reflection
// matrix Q (zero diagonal): given x with x(0) >= 0, find the pushing term y
// (nondecreasing, y(0) = 0) and the reflected path
//
//     z_j(t) = x_j(t) + y_j(t) - sum_i q_ij y_i(t) >= 0,
//
// where y_i only increases while z_i = 0. Paths are row vectors, so the
// boundary coupling reads y(t) Q.
//
// The solver runs the Harrison-Reiman fixed-point iteration
//     y[k+1](t) = sup_{s <= t} ( y[k](s) R - x'(s) )_+
// in coordinates rescaled by a positive diagonal D (x' = x D^-1,
// R = D Q D^-1), which contracts in the T,max norm at rate ||R||_cs < 1.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rankbm/core.hpp"

namespace rankbm {

/// Dense row-major square matrix; the reflection matrices here are small.
class Matrix {
  public:
    Matrix() = default;
    explicit Matrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    static Matrix identity(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// d x d matrix with 1/2 on both off-diagonals (gaps of K = d + 1 ranked
/// particles). d = 1 gives the 1x1 zero matrix.
Matrix nearest_neighbor_q(int d);

/// Maximum absolute column sum.
double cs_norm(const Matrix& m);

/// Piecewise-affine v on [0, 1] with v(0) = K, v(1/K) = 2, v(1/2) = 0,
/// affine on [0, 1/K] and [1/K, 1/2], and v(x) = -v(1 - x); w is its
/// antiderivative from 0 (strictly concave, w(0) = w(1) = 0, w(1/2) = 1).
/// Only defined for K >= 4.
class WeightFunction {
  public:
    explicit WeightFunction(int K);

    int K() const noexcept { return K_; }
    double v(double x) const;
    double w(double x) const;

  private:
    double v_left(double x) const noexcept;  // v on [0, 1/2]
    double w_left(double x) const noexcept;  // w on [0, 1/2]

    int K_;
    double knot_;         // 1/K
    double outer_slope_;  // slope of v on [0, 1/K]
    double inner_slope_;  // slope of v on [1/K, 1/2]
};

/// ||R||_cs evaluated directly from w:
/// max_l ( w((l-1)/K) + w((l+1)/K) ) / ( 2 w(l/K) ), l = 1..K-1.
double rescaled_cs_norm(const WeightFunction& w);

struct ReflectionSpec {
    std::size_t dim = 0;
    Matrix q;
    std::vector<double> d;  // diagonal of D
    Matrix r;               // r_ij = d_i q_ij / d_j
    double rho = 1.0;       // max d / min d
    double cs_norm_r = 0.0;
    /// Certified T,max Lipschitz budget for the local-time map. Equals
    /// exact_ratio() when D is the identity; for the concave-weight
    /// rescaling it is the closed form 2K^2(K-2)/(K+2) <= 2(K-1)^2.
    double budget = 1.0;

    double exact_ratio() const noexcept { return rho / (1.0 - cs_norm_r); }

    /// Nonzero entries of column j of R, used by the solver.
    struct Entry {
        std::size_t row;
        double value;
    };
    std::vector<std::vector<Entry>> r_columns;
};

/// Validates Q (square, nonnegative, zero diagonal) and D (positive), derives
/// R, rho and ||R||_cs, and rejects ||R||_cs >= 1. budget is set to
/// exact_ratio().
ReflectionSpec make_reflection_spec(Matrix q, std::vector<double> d);

/// Nearest-neighbour Q for K particles with D = I for K in {2, 3} and
/// D_i = w(i / K) for K >= 4.
ReflectionSpec build_rescaling(int K);

struct SkorokhodSolution {
    GridPath x;
    GridPath y;
    GridPath z;
    std::size_t iterations = 0;
    double residual = 0.0;
    /// T,max gap between successive rescaled iterates, one entry per
    /// iteration.
    std::vector<double> gaps;
};

/// 1e-12 * (1 + ||x||_T,max).
double default_tolerance(const GridPath& x);

/// Harrison-Reiman iteration until the rescaled iterate gap is <= tol.
/// Throws std::invalid_argument on x(0) < 0, dimension mismatch or tol <= 0,
/// and std::runtime_error if the contraction-derived iteration cap is hit.
SkorokhodSolution solve_local_time(const GridPath& x, const ReflectionSpec& spec,
                                   std::optional<double> tol = std::nullopt);

/// Same solve; the reflected path z is the quantity of interest.
SkorokhodSolution solve_reflected(const GridPath& x, const ReflectionSpec& spec,
                                  std::optional<double> tol = std::nullopt);

/// Closed-form one-dimensional local time y(t_k) = max_{j<=k} (-x(t_j))_+.
GridPath solve_local_time_1d(const GridPath& x);

struct LipschitzBudget {
    double tmax_L;        // T,max -> T,max for the local-time map
    double t2_L;          // T,2 -> T,2 for the local-time map, 2(K-1)^{5/2}
    double tmax_R;        // T,max -> T,max for the reflected map, 5(K-1)^2
    double tmax_L_exact;  // rho / (1 - ||R||_cs), never above tmax_L
};

LipschitzBudget lipschitz_budget(int K);

struct InvariantReport {
    bool nonnegative = true;     // z >= -tol
    bool monotone = true;        // y(0) = 0, y nondecreasing
    bool assembled = true;       // z = x + y - yQ to rounding
    bool complementary = true;   // sum dy 1{z > eps_c} <= 1e-6 y(T), per component
    bool contracting = true;     // gaps shrink by ||R||_cs per iteration
    bool converged = true;       // residual <= tol
    double off_boundary = 0.0;   // worst relative off-boundary push
    bool ok() const noexcept {
        return nonnegative && monotone && assembled && complementary && contracting && converged;
    }
};

/// eps_c = 10 * budget * tol.
InvariantReport check_invariants(const GridPath& x, const ReflectionSpec& spec,
                                 const SkorokhodSolution& sol, double tol);

}  // namespace rankbm
