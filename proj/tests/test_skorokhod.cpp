#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "rankbm/oracle.hpp"
#include "rankbm/skorokhod.hpp"

using namespace rankbm;

namespace {

// Random walk started at a nonnegative point with a downward pull so that
// every boundary gets hit.
GridPath walk(std::mt19937_64& gen, std::size_t d, std::size_t steps, double pull = 1.0) {
    TimeGrid g(1.0, steps);
    std::normal_distribution<double> n(0.0, std::sqrt(g.dt()));
    std::uniform_real_distribution<double> u(0.0, 0.5);
    GridPath p(g, d);
    for (std::size_t i = 0; i < d; ++i) p(0, i) = u(gen);
    for (std::size_t k = 1; k < p.points(); ++k)
        for (std::size_t i = 0; i < d; ++i) p(k, i) = p(k - 1, i) - pull * g.dt() + n(gen);
    return p;
}

GridPath from_function(std::size_t steps, double (*f)(double)) {
    GridPath p(TimeGrid(1.0, steps), 1);
    for (std::size_t k = 0; k < p.points(); ++k) p(k, 0) = f(p.grid().time(k));
    return p;
}

}  // namespace

TEST_CASE("nearest neighbour matrix") {
    CHECK(nearest_neighbor_q(1)(0, 0) == 0.0);
    Matrix q2 = nearest_neighbor_q(2);
    CHECK(q2(0, 1) == 0.5);
    CHECK(q2(1, 0) == 0.5);
    CHECK(q2(0, 0) == 0.0);
    Matrix q3 = nearest_neighbor_q(3);
    CHECK(q3(0, 0) + q3(1, 0) + q3(2, 0) == 0.5);
    CHECK(q3(0, 1) + q3(1, 1) + q3(2, 1) == 1.0);
    CHECK(q3(0, 2) + q3(1, 2) + q3(2, 2) == 0.5);
    CHECK_THROWS_AS(nearest_neighbor_q(0), std::invalid_argument);
}

TEST_CASE("column-sum norm") {
    CHECK(cs_norm(Matrix::identity(4)) == 1.0);
    CHECK(cs_norm(nearest_neighbor_q(2)) == 0.5);
    CHECK(cs_norm(nearest_neighbor_q(3)) == 1.0);
}

TEST_CASE("weight function shape") {
    for (int K : {4, 5, 10, 30, 64}) {
        WeightFunction w(K);
        CHECK(w.v(0.0) == doctest::Approx(K));
        CHECK(w.v(1.0 / K) == doctest::Approx(2.0));
        CHECK(w.v(0.5) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(w.w(0.0) == 0.0);
        CHECK(w.w(1.0) == 0.0);
        CHECK(w.w(0.5) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(w.w(1.0 / K) == doctest::Approx((K + 2.0) / (2.0 * K)).epsilon(1e-14));
        // w against Simpson's rule on v, split at the knots so that each
        // piece is affine and the rule is exact
        auto simpson = [&w](double a, double b) {
            return b <= a ? 0.0 : (b - a) / 6.0 * (w.v(a) + 4.0 * w.v(0.5 * (a + b)) + w.v(b));
        };
        const std::vector<double> knots{0.0, 1.0 / K, 0.5, 1.0 - 1.0 / K, 1.0};
        for (int i = 1; i < 200; ++i) {
            const double x = i / 200.0;
            CHECK(w.v(x) == doctest::Approx(-w.v(1.0 - x)).epsilon(1e-12));
            CHECK(w.w(x) > 0.0);
            double integral = 0.0;
            for (std::size_t p = 0; p + 1 < knots.size(); ++p)
                integral += simpson(knots[p], std::min(x, knots[p + 1]));
            CHECK(std::abs(w.w(x) - integral) <= 1e-13);
            CHECK(w.v(x) < w.v(x - 1.0 / 200.0));
        }
    }
    CHECK_THROWS_AS(WeightFunction(3), std::invalid_argument);
    CHECK_THROWS(WeightFunction(5).w(1.5));
}

TEST_CASE("rescaling for small K") {
    ReflectionSpec s2 = build_rescaling(2);
    CHECK(s2.dim == 1);
    CHECK(s2.d == std::vector<double>{1.0});
    CHECK(s2.r(0, 0) == 0.0);
    CHECK(s2.rho == 1.0);
    CHECK(s2.budget == 1.0);

    ReflectionSpec s3 = build_rescaling(3);
    CHECK(s3.d == std::vector<double>{1.0, 1.0});
    CHECK(s3.cs_norm_r == 0.5);
    CHECK(s3.budget == 2.0);
    CHECK_THROWS_AS(build_rescaling(1), std::invalid_argument);
}

TEST_CASE("rescaling at K = 4") {
    ReflectionSpec s = build_rescaling(4);
    CHECK(s.d[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(s.d[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.rho == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(s.cs_norm_r == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(std::abs(s.budget - 32.0 / 3.0) <= 1e-12 * 32.0 / 3.0);
    CHECK(s.exact_ratio() == doctest::Approx(16.0 / 3.0).epsilon(1e-14));
    CHECK(s.budget <= 18.0);
}

TEST_CASE("rescaling arithmetic for many K") {
    for (int K = 4; K <= 64; ++K) {
        ReflectionSpec s = build_rescaling(K);
        const double closed = rescaled_cs_norm(WeightFunction(K));
        CHECK(std::abs(s.cs_norm_r - closed) <= 1e-12);
        CHECK(s.cs_norm_r < 1.0);
        CHECK(s.exact_ratio() <= s.budget * (1 + 1e-12));
        CHECK(s.budget <= 2.0 * (K - 1) * (K - 1));
        for (std::size_t i = 0; i < s.dim; ++i)
            for (std::size_t j = 0; j < s.dim; ++j)
                CHECK(s.r(i, j) == doctest::Approx(s.d[i] * s.q(i, j) / s.d[j]).epsilon(1e-15));
    }
}

TEST_CASE("reflection spec validation") {
    CHECK_THROWS_AS(make_reflection_spec(nearest_neighbor_q(3), {1.0, 1.0, 1.0}),
                    std::invalid_argument);
    Matrix neg(2);
    neg(0, 1) = -0.1;
    CHECK_THROWS(make_reflection_spec(neg, {1.0, 1.0}));
    CHECK_THROWS(make_reflection_spec(nearest_neighbor_q(2), {1.0, 0.0}));
    CHECK_THROWS(make_reflection_spec(nearest_neighbor_q(2), {1.0}));
}

TEST_CASE("one-dimensional closed forms") {
    ReflectionSpec s = build_rescaling(2);
    GridPath one = from_function(100, [](double) { return 1.0; });
    SkorokhodSolution a = solve_local_time(one, s);
    CHECK(norm_tmax(a.y) == 0.0);
    CHECK(a.z == one);

    GridPath down = from_function(100, [](double t) { return -t; });
    SkorokhodSolution b = solve_local_time(down, s);
    for (std::size_t k = 0; k < down.points(); ++k) {
        CHECK(b.y(k, 0) == doctest::Approx(down.grid().time(k)).epsilon(1e-13));
        CHECK(std::abs(b.z(k, 0)) <= 1e-12);
    }

    GridPath vee = from_function(100, [](double t) { return 1.0 - 2.0 * t; });
    SkorokhodSolution c = solve_reflected(vee, s);
    for (std::size_t k = 0; k < vee.points(); ++k) {
        const double t = vee.grid().time(k);
        CHECK(c.z(k, 0) == doctest::Approx(std::max(1.0 - 2.0 * t, 0.0)).epsilon(1e-12));
        CHECK(c.y(k, 0) == doctest::Approx(std::max(2.0 * t - 1.0, 0.0)).epsilon(1e-12));
    }

    GridPath dip = from_function(1000, [](double t) { return 0.2 * std::cos(8.0 * t) - 0.1 * t; });
    double lowest = 0.0;
    for (std::size_t k = 0; k < dip.points(); ++k) lowest = std::min(lowest, dip(k, 0));
    CHECK(solve_local_time_1d(dip)(1000, 0) == -lowest);
    CHECK_THROWS(solve_local_time_1d(GridPath(TimeGrid(1.0, 3), 2)));
}

TEST_CASE("K = 2 solver equals the running-max formula") {
    std::mt19937_64 gen(11);
    ReflectionSpec s = build_rescaling(2);
    for (int trial = 0; trial < 50; ++trial) {
        GridPath x = walk(gen, 1, 2000);
        SkorokhodSolution sol = solve_local_time(x, s);
        CHECK(norm_tmax(sol.y - solve_local_time_1d(x)) <= 1e-12);
    }
}

TEST_CASE("whole-path iteration agrees with per-step oracle") {
    std::mt19937_64 gen(5);
    for (int K = 3; K <= 8; ++K) {
        ReflectionSpec s = build_rescaling(K);
        for (int trial = 0; trial < 5; ++trial) {
            GridPath x = walk(gen, K - 1, 500);
            SkorokhodSolution sol = solve_local_time(x, s);
            oracle::StepSolution ref = oracle::solve_per_step(x, s.q);
            CHECK(norm_tmax(sol.y - ref.y) <= 1e-10);
            CHECK(norm_tmax(sol.z - ref.z) <= 1e-10);
        }
    }
}

TEST_CASE("solution invariants") {
    std::mt19937_64 gen(17);
    for (int K = 2; K <= 10; ++K) {
        ReflectionSpec s = build_rescaling(K);
        for (int trial = 0; trial < 5; ++trial) {
            GridPath x = walk(gen, K - 1, 400, 2.0);
            const double tol = default_tolerance(x);
            SkorokhodSolution sol = solve_local_time(x, s, tol);
            const double eps_c = 10.0 * s.budget * tol;
            for (std::size_t i = 0; i < s.dim; ++i) {
                CHECK(sol.y(0, i) == 0.0);
                double off_boundary = 0.0;
                for (std::size_t k = 0; k < x.points(); ++k) {
                    CHECK(sol.z(k, i) >= -tol);
                    double assembled = x(k, i) + sol.y(k, i);
                    for (std::size_t j = 0; j < s.dim; ++j) assembled -= s.q(j, i) * sol.y(k, j);
                    CHECK(std::abs(sol.z(k, i) - assembled) <= 1e-14 * (1.0 + norm_tmax(sol.y)));
                    if (k > 0) {
                        CHECK(sol.y(k, i) >= sol.y(k - 1, i));
                        if (sol.z(k, i) > eps_c) off_boundary += sol.y(k, i) - sol.y(k - 1, i);
                    }
                }
                CHECK(off_boundary <= 1e-6 * sol.y(x.points() - 1, i));
            }
            const double rounding = 1e-14 * (1.0 + norm_tmax(x));
            for (std::size_t it = 1; it < sol.gaps.size(); ++it) {
                CHECK(sol.gaps[it] <= s.cs_norm_r * sol.gaps[it - 1] + rounding);
            }
            CHECK(sol.residual <= tol);
            CHECK(sol.iterations == sol.gaps.size());
        }
    }
}

TEST_CASE("degenerate and invalid input") {
    ReflectionSpec s = build_rescaling(5);
    GridPath zero(TimeGrid(1.0, 10), 4);
    SkorokhodSolution sol = solve_local_time(zero, s);
    CHECK(norm_tmax(sol.y) == 0.0);
    CHECK(norm_tmax(sol.z) == 0.0);

    GridPath bad = zero;
    bad(0, 2) = -1e-3;
    CHECK_THROWS_AS(solve_local_time(bad, s), std::invalid_argument);
    CHECK_THROWS_AS(solve_local_time(zero, s, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_local_time(GridPath(TimeGrid(1.0, 10), 3), s), std::invalid_argument);
}

TEST_CASE("lipschitz budgets") {
    LipschitzBudget b2 = lipschitz_budget(2);
    CHECK(b2.t2_L == 2.0);
    CHECK(b2.tmax_L == 1.0);
    LipschitzBudget b4 = lipschitz_budget(4);
    CHECK(b4.t2_L == doctest::Approx(2.0 * std::pow(3.0, 2.5)).epsilon(1e-14));
    CHECK(b4.t2_L == doctest::Approx(31.177).epsilon(1e-4));
    CHECK(b4.tmax_R == 45.0);
    CHECK(std::abs(b4.tmax_L - 32.0 / 3.0) <= 1e-12 * 32.0 / 3.0);
    CHECK(b4.tmax_L <= 18.0);
    CHECK(b4.tmax_L_exact == doctest::Approx(16.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS(lipschitz_budget(1));
}

TEST_CASE("lipschitz inequalities on random pairs") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int K = 2; K <= 6; ++K) {
        ReflectionSpec s = build_rescaling(K);
        LipschitzBudget b = lipschitz_budget(K);
        for (int trial = 0; trial < 40; ++trial) {
            GridPath g = walk(gen, K - 1, 100);
            GridPath h = g;
            const double amp = std::pow(10.0, -trial % 4);
            for (std::size_t k = 1; k < h.points(); ++k)
                for (std::size_t i = 0; i < h.dim(); ++i) h(k, i) += amp * n(gen);
            SkorokhodSolution a = solve_local_time(g, s), c = solve_local_time(h, s);
            const GridPath dx = g - h;
            CHECK(norm_tmax(a.y - c.y) <= b.tmax_L * norm_tmax(dx) * (1 + 1e-9));
            CHECK(norm_t2(a.y - c.y) <= b.t2_L * norm_t2(dx) * (1 + 1e-9));
            CHECK(norm_tmax(a.z - c.z) <= b.tmax_R * norm_tmax(dx) * (1 + 1e-9));
        }
    }
}
