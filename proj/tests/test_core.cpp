#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <sstream>

#include "rankbm/core.hpp"

using namespace rankbm;

namespace {

GridPath random_path(std::mt19937_64& gen, std::size_t d, std::size_t steps) {
    std::normal_distribution<double> n(0.0, 1.0);
    GridPath p(TimeGrid(1.0, steps), d);
    for (std::size_t k = 0; k < p.points(); ++k)
        for (std::size_t i = 0; i < d; ++i) p(k, i) = n(gen);
    return p;
}

}  // namespace

TEST_CASE("grid points") {
    TimeGrid g = make_grid(1.0, 4);
    CHECK(g.size() == 5);
    const std::vector<double> want{0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(g.times() == want);
    CHECK(make_grid(30.0, 30000).dt() == doctest::Approx(0.001).epsilon(1e-15));
    CHECK_THROWS_AS(make_grid(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(-1.0, 3), std::invalid_argument);
    CHECK(make_grid(3.0, 7).time(7) == 3.0);
}

TEST_CASE("constant and monotone paths") {
    GridPath c(TimeGrid(1.0, 10), 3);
    for (std::size_t k = 0; k < c.points(); ++k)
        for (std::size_t i = 0; i < 3; ++i) c(k, i) = -2.5;
    CHECK(norm_t2(c) == doctest::Approx(2.5));
    CHECK(norm_tmax(c) == doctest::Approx(2.5));

    GridPath t(TimeGrid(1.0, 8), 1);
    GridPath two(TimeGrid(1.0, 8), 2);
    for (std::size_t k = 0; k < t.points(); ++k) {
        t(k, 0) = t.grid().time(k);
        two(k, 0) = t.grid().time(k);
        two(k, 1) = -2.0 * t.grid().time(k);
    }
    CHECK(norm_t2(t) == 1.0);
    CHECK(norm_tmax(two) == 2.0);
}

TEST_CASE("t2 norm by hand") {
    GridPath p(TimeGrid(1.0, 2), 2);
    p(1, 0) = -3.0;
    p(2, 0) = 1.0;
    p(0, 1) = 4.0;
    CHECK(norm_t2(p) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));
    CHECK(norm_t2(p) == doctest::Approx(3.53553).epsilon(1e-6));
}

TEST_CASE("norm equivalence, homogeneity, triangle inequality") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + trial % 6;
        GridPath a = random_path(gen, d, 20);
        GridPath b = random_path(gen, d, 20);
        CHECK(norm_tmax(a) >= norm_t2(a));
        CHECK(norm_t2(a) >= norm_tmax(a) / std::sqrt(static_cast<double>(d)) - 1e-15);
        const double s = -3.7;
        CHECK(norm_tmax(s * a) == doctest::Approx(3.7 * norm_tmax(a)).epsilon(1e-12));
        CHECK(norm_t2(s * a) == doctest::Approx(3.7 * norm_t2(a)).epsilon(1e-12));
        CHECK(norm_tmax(a + b) <= norm_tmax(a) + norm_tmax(b) + 1e-12);
        CHECK(norm_t2(a + b) <= norm_t2(a) + norm_t2(b) + 1e-12);
    }
}

TEST_CASE("gaussian tail values") {
    CHECK(gaussian_tail(0.0).value == 0.5);
    CHECK(gaussian_tail(1.0).value == doctest::Approx(0.15865525393145705).epsilon(1e-13));
    TailValue t2 = gaussian_tail(2.0);
    CHECK(t2.value == doctest::Approx(0.022750131948179195).epsilon(1e-13));
    CHECK(t2.lower == doctest::Approx(2.0 * 0.05399096651318806 / (2.0 + std::sqrt(8.0))).epsilon(1e-13));
    CHECK(t2.upper == doctest::Approx(0.02700).epsilon(1e-3));
    CHECK(t2.lower <= t2.value);
    CHECK(t2.value <= t2.upper);
    TailValue neg = gaussian_tail(-1.0);
    CHECK(neg.lower == neg.value);
    CHECK(neg.upper == neg.value);
    // far tail keeps relative precision; the oracle is the asymptotic series
    const double y = 30.0;
    const double series = normal_pdf(y) / y * (1 - 1 / (y * y) + 3 / std::pow(y, 4) - 15 / std::pow(y, 6));
    CHECK(gaussian_tail(y).value == doctest::Approx(series).epsilon(1e-9));
}

TEST_CASE("gaussian tail bracket and symmetry") {
    for (int i = 1; i <= 1000; ++i) {
        const double y = i * 0.01;
        TailValue t = gaussian_tail(y);
        CHECK(t.lower < t.value);
        CHECK(t.value < t.upper);
        CHECK(t.lower >= 0.0);
        CHECK(gaussian_tail(y).value + gaussian_tail(-y).value == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("csv round trip") {
    std::mt19937_64 gen(3);
    GridPath p = random_path(gen, 3, 17);
    std::stringstream ss;
    write_csv(ss, p, {"hello"});
    CHECK(ss.str().rfind("# hello\nt,c1,c2,c3\n", 0) == 0);
    GridPath q = read_csv(ss);
    CHECK(q == p);
}

TEST_CASE("csv rejects malformed input") {
    std::stringstream bad_header("x,c1\n0,1\n1,2\n");
    CHECK_THROWS(read_csv(bad_header));
    std::stringstream bad_grid("t,c1\n0,1\n1,2\n3,4\n");
    CHECK_THROWS(read_csv(bad_grid));
    std::stringstream short_row("t,c1,c2\n0,1,2\n1,2\n");
    CHECK_THROWS(read_csv(short_row));
}

TEST_CASE("path arithmetic") {
    GridPath a(TimeGrid(1.0, 2), 2), b(TimeGrid(1.0, 3), 2);
    CHECK_THROWS_AS(a += b, std::invalid_argument);
    GridPath s = a.subsampled(2);
    CHECK(s.points() == 2);
    CHECK_THROWS(a.subsampled(3));
}
