#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rankbm/bounds.hpp"

using namespace rankbm;

TEST_CASE("slope tail constants") {
    CHECK(c_alpha(2) == doctest::Approx(8.0 / (std::log(2.0) * std::log(2.0))).epsilon(1e-14));
    CHECK(c_alpha(2) == doctest::Approx(16.651).epsilon(1e-4));
    CHECK(kMu == 400000.0);
    CHECK(kMuPrime == 50000.0);
    // J = 3 by hand: num = log 6 + log 3, den = log^2 2 + log^2 3
    const double l2 = std::log(2.0), l3 = std::log(3.0);
    const double ratio = (std::log(6.0) + l3) / (l2 * l2 + l3 * l3);
    CHECK(c_alpha(3) == doctest::Approx(27.0 * ratio * ratio).epsilon(1e-14));
    CHECK_THROWS(c_alpha(1));
}

TEST_CASE("slope tail bound") {
    const double r0 = slope_informative_radius(2, 1.0);
    CHECK(r0 == doctest::Approx(2148.6).epsilon(1e-4));
    CHECK(slope_tail_bound(30, 2, 1.0, r0).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(slope_tail_bound(30, 2, 1.0, 2100).vacuous());
    CHECK_FALSE(slope_tail_bound(30, 2, 1.0, 2200).vacuous());
    CHECK_FALSE(slope_tail_bound(30, 2, 1.0, 2200).in_hypothesis);
    CHECK(slope_tail_bound(31, 2, 1.0, 2200).in_hypothesis);
    CHECK(slope_tail_bound(31, 2, 1.0, 0.0).value == 2.0);
    CHECK(slope_median_bound(1000000) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS(slope_tail_bound(30, 2, 0.0, 1.0));
}

TEST_CASE("localisation bounds") {
    BoundValue s = sigma_bound(30, 2);
    CHECK(s.value == doctest::Approx(24.0 * std::pow(30.0, -1.5) * std::exp(-0.6)).epsilon(1e-14));
    CHECK(s.value == doctest::Approx(0.0803).epsilon(2e-3));
    CHECK(s.in_hypothesis);
    CHECK(sigma_bound(30, 4).value == doctest::Approx(4.0 * s.value).epsilon(1e-14));
    CHECK(sigma_bound(1000, 2).value == doctest::Approx(1.5643e-12).epsilon(1e-4));
    CHECK(sigma_bound(1100, 2).value < 1e-12);
    CHECK_FALSE(sigma_bound(29, 2).in_hypothesis);
    CHECK(sigma_bound(29, 2).value > 0.0);

    CHECK(tilde_sigma_bound(100).value == doctest::Approx(110.0 * std::exp(-0.2)).epsilon(1e-14));
    CHECK(tilde_sigma_bound(100).value == doctest::Approx(90.06).epsilon(1e-4));
    CHECK(tilde_sigma_bound(100).vacuous());
    CHECK(tilde_sigma_bound(10000).value == doctest::Approx(2.267e-6).epsilon(1e-3));
    for (int K = 251; K < 3000; K += 7) CHECK(tilde_sigma_bound(K + 7).value < tilde_sigma_bound(K).value);
}

TEST_CASE("stopping time bound") {
    BoundValue t = tau_bound(1.0, 0.0, 2, 1.0, 5);
    CHECK(t.value == doctest::Approx(0.5 * std::exp(-8.0)).epsilon(1e-14));
    CHECK(t.value == doctest::Approx(1.678e-4).epsilon(1e-3));
    CHECK(t.in_hypothesis);
    CHECK(tau_bound(1.0, 0.0, 2, 1.0, 60).value < 1e-300);
    CHECK_FALSE(tau_bound(1.0, 10.0, 2, 1.0, 5).in_hypothesis);
    CHECK(tau_bound(1.0, 4.0, 2, 1.0, 5).in_hypothesis);
    for (int m = 3; m < 40; ++m) CHECK(tau_bound(0.7, 0.2, 3, 2.0, m + 1).value < tau_bound(0.7, 0.2, 3, 2.0, m).value);
    CHECK_THROWS(tau_bound(0.0, 0.0, 2, 1.0, 5));
}

TEST_CASE("finite-system concentration") {
    FiniteConcentration f = finite_concentration_bound(2, 2, 1.0, 20.0, ConcentrationKind::local_time);
    CHECK(f.threshold == doctest::Approx(16.0 * std::sqrt(2.0 * std::log(2.0))).epsilon(1e-14));
    CHECK(f.threshold == doctest::Approx(18.84).epsilon(1e-3));
    CHECK(f.value == doctest::Approx(std::exp(-400.0 / 512.0)).epsilon(1e-14));
    CHECK(f.value == doctest::Approx(0.4578).epsilon(1e-4));
    CHECK(f.above_threshold);
    FiniteConcentration g = finite_concentration_bound(2, 2, 1.0, 20.0, ConcentrationKind::gaps);
    CHECK(g.threshold == doctest::Approx(3.0 * f.threshold).epsilon(1e-14));
    CHECK(std::log(g.value) == doctest::Approx(std::log(f.value) / 9.0).epsilon(1e-14));
    CHECK_FALSE(g.above_threshold);

    // closed forms of the finite-system constants
    for (int K : {3, 7, 12}) {
        for (int n : {2, K}) {
            const double T = 2.5, r = 1e4;
            const double thr = 16.0 * std::sqrt(2.0 * std::pow(K - 1.0, 5) * T * std::log(2.0) / (n - 1.0));
            const double val = std::exp(-r * r * (n - 1.0) / (512.0 * std::pow(K - 1.0, 5) * T));
            FiniteConcentration a = finite_concentration_bound(K, n, T, r, ConcentrationKind::local_time);
            CHECK(a.threshold == doctest::Approx(thr).epsilon(1e-13));
            CHECK(a.value == doctest::Approx(val).epsilon(1e-12));
        }
    }
    CHECK_THROWS(finite_concentration_bound(3, 4, 1.0, 1.0, ConcentrationKind::gaps));
    CHECK_THROWS(finite_concentration_bound(3, 1, 1.0, 1.0, ConcentrationKind::gaps));
}

TEST_CASE("infinite-system exponents") {
    const double dl = infinite_exponent_denominator(ConcentrationKind::local_time);
    const double dg = infinite_exponent_denominator(ConcentrationKind::gaps);
    CHECK(dl == doctest::Approx(13.02).epsilon(1e-3));
    CHECK(dg == doctest::Approx(24.4).epsilon(2e-3));
    CHECK(dl <= 14.0);
    CHECK(dg <= 25.0);
    InfiniteExponent a = infinite_concentration_exponent(0.5, 4, 2.0, 100.0, ConcentrationKind::local_time);
    InfiniteExponent b = infinite_concentration_exponent(0.5, 4, 2.0, 200.0, ConcentrationKind::local_time);
    CHECK(b.sharp / a.sharp == doctest::Approx(std::pow(2.0, 4.0 / 7.0)).epsilon(1e-13));
    CHECK(std::pow(2.0, 4.0 / 7.0) == doctest::Approx(1.486).epsilon(1e-3));
    CHECK(a.sharp >= a.rounded);
    CHECK(a.sharp / a.rounded == doctest::Approx(14.0 / dl).epsilon(1e-14));
    CHECK_THROWS(infinite_concentration_exponent(0.5, 1, 2.0, 1.0, ConcentrationKind::gaps));
}

TEST_CASE("radius constants") {
    const double c = 1.0, T = 1.0;
    const int n = 2, N = 2;
    for (auto kind : {ConcentrationKind::local_time, ConcentrationKind::gaps}) {
        for (double m_in : {0.0, 1.0, 3.0, 10.0}) {
            RadiusConstant rc = radius_constant(c, n, N, T, m_in, kind);
            CHECK(m_of_r(c, n, rc.cond1, kind) == doctest::Approx(m_in).epsilon(1e-12));
            CHECK(rc.value == std::max(rc.cond1, rc.cond2));
            // brute-force scan above the constant: condition 2 holds everywhere
            const double factor = kind == ConcentrationKind::gaps ? 48.0 : 16.0;
            auto g = [&](double r) {
                const double m = std::ceil(m_of_r(c, n, r, kind));
                return factor * std::sqrt(2.0 * std::pow(N + m - 1.0, 5) * T * std::log(2.0) / (n - 1.0));
            };
            for (int i = 1; i <= 20000; ++i) {
                const double r = rc.cond2 * (1.0 + i * 1e-3);
                CHECK(r >= g(r));
            }
            // and fails just below it
            const double below = rc.cond2 * (1.0 - 1e-9);
            CHECK(below < g(below));
        }
    }
    CHECK(m_of_r(1.0, 4, 512.0, ConcentrationKind::local_time) ==
          doctest::Approx(std::pow(9.0 / 512.0, 1.0 / 7.0) * std::pow(512.0, 2.0 / 7.0)).epsilon(1e-14));
    CHECK_THROWS(radius_constant(1.0, 3, 2, 1.0, 1.0, ConcentrationKind::gaps));
}

TEST_CASE("bound table") {
    std::vector<BoundRow> rows{{"sigma", "K=30;J=2", 0.0, 0.08, false, true},
                               {"tilde_sigma", "K=100", 0.0, 90.0, true, true}};
    const std::string csv = bound_table_csv(rows);
    CHECK(csv.rfind("name,params,r,value,vacuous,in_hypothesis\n", 0) == 0);
    CHECK(csv.find("sigma,\"K=30;J=2\",0,0.080000000000000002,false,true\n") != std::string::npos);
    CHECK(csv.find("tilde_sigma,\"K=100\",0,90,true,true\n") != std::string::npos);
}
