// SPDX-License-Identifier: Apache-2.0
#include "rankbm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rankbm/core.hpp"

namespace rankbm {

double c_alpha(int J) {
    if (J < 2) throw std::invalid_argument("c_alpha: J must be >= 2");
    double num = 0.0, den = 0.0, tail = 0.0;
    for (int i = J - 1; i >= 1; --i) {
        tail += std::log(i + 1);  // log(J!/i!)
        num += tail;
    }
    for (int i = 2; i <= J; ++i) den += std::log(i) * std::log(i);
    const double ratio = num / den;
    return static_cast<double>(J) * J * J * ratio * ratio;
}

BoundValue slope_tail_bound(int K, int J, double delta, double r) {
    if (!(delta > 0.0)) throw std::invalid_argument("slope_tail_bound: delta must be > 0");
    const double v = 2.0 * std::exp(-r * r * delta * delta / (kMu * c_alpha(J)));
    return {v, 15 * J < K};
}

double slope_informative_radius(int J, double delta) {
    return std::sqrt(kMu * c_alpha(J) * std::log(2.0)) / delta;
}

double slope_median_bound(int K) { return 0.5 + 17.0 * std::sqrt(K) * std::exp(-K / 500.0); }

BoundValue sigma_bound(int K, int J) {
    if (K < 1 || J < 1) throw std::invalid_argument("sigma_bound: K, J must be >= 1");
    const double k = K;
    return {6.0 * J * J * std::pow(k, -1.5) * std::exp(-k / 50.0), K >= 30};
}

BoundValue tilde_sigma_bound(int K) {
    if (K < 1) throw std::invalid_argument("tilde_sigma_bound: K must be >= 1");
    return {11.0 * std::sqrt(K) * std::exp(-K / 500.0), true};
}

BoundValue tau_bound(double c, double Delta, int N, double T, int m) {
    if (!(c > 0.0) || !(T > 0.0)) throw std::invalid_argument("tau_bound: c, T must be > 0");
    const double a = c * m - c - Delta * T;
    const double v = N * T / (c * a) * std::exp(-a * a / (2.0 * T));
    return {v, m >= Delta * T / c + 1.0};
}

double finite_qtci_constant(int K, int n, double T, ConcentrationKind kind) {
    if (K < 2 || n < 2 || n > K) throw std::invalid_argument("finite concentration: need 2 <= n <= K");
    if (!(T > 0.0)) throw std::invalid_argument("finite concentration: T must be > 0");
    const double base = 64.0 * std::pow(K - 1.0, 5.0) * T / (n - 1.0);
    return kind == ConcentrationKind::gaps ? 9.0 * base : base;
}

FiniteConcentration finite_concentration_bound(int K, int n, double T, double r,
                                               ConcentrationKind kind) {
    const double C = finite_qtci_constant(K, n, T, kind);
    FiniteConcentration f;
    f.threshold = 2.0 * std::sqrt(2.0 * C * std::numbers::ln2);
    f.value = std::exp(-r * r / (8.0 * C));
    f.above_threshold = r >= f.threshold;
    return f;
}

double infinite_exponent_denominator(ConcentrationKind kind) {
    const double p = kind == ConcentrationKind::gaps ? 9.0 / 7.0 : 5.0 / 7.0;
    return std::pow(2.0, 18.0 / 7.0) * std::pow(3.0, p);
}

double infinite_exponent_denominator_rounded(ConcentrationKind kind) {
    return kind == ConcentrationKind::gaps ? 25.0 : 14.0;
}

InfiniteExponent infinite_concentration_exponent(double c, int n, double T, double r,
                                                 ConcentrationKind kind) {
    if (!(c > 0.0) || n < 2 || !(T > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("infinite_concentration_exponent: need c, T, r > 0 and n >= 2");
    }
    const double core = std::pow(r, 4.0 / 7.0) * std::pow(n - 1.0, 2.0 / 7.0) *
                        std::pow(c, 10.0 / 7.0) / T;
    return {core / infinite_exponent_denominator(kind),
            core / infinite_exponent_denominator_rounded(kind)};
}

namespace {

double m_coefficient(double c, int n, ConcentrationKind kind) {
    const double base = kind == ConcentrationKind::gaps ? (n - 1.0) / (512.0 * 3.0 * c * c)
                                                        : 3.0 * (n - 1.0) / (512.0 * c * c);
    return std::pow(base, 1.0 / 7.0);
}

}  // namespace

double m_of_r(double c, int n, double r, ConcentrationKind kind) {
    if (!(c > 0.0) || n < 2 || r < 0.0) throw std::invalid_argument("m_of_r: need c > 0, n >= 2, r >= 0");
    return m_coefficient(c, n, kind) * std::pow(r, 2.0 / 7.0);
}

RadiusConstant radius_constant(double c, int n, int N, double T, double m_in,
                               ConcentrationKind kind) {
    if (!(c > 0.0) || n < 2 || N < n || !(T > 0.0) || m_in < 0.0) {
        throw std::invalid_argument("radius_constant: need c, T > 0, 2 <= n <= N, m >= 0");
    }
    const double a = m_coefficient(c, n, kind);
    const double factor = kind == ConcentrationKind::gaps ? 48.0 : 16.0;
    auto radius_of_m = [a](double m) { return std::pow(m / a, 3.5); };
    auto g = [&](long long q) {
        return factor * std::sqrt(2.0 * std::pow(N + q - 1.0, 5.0) * T * std::numbers::ln2 / (n - 1.0));
    };

    RadiusConstant out;
    out.cond1 = radius_of_m(m_in);

    // ceil(m(r)) = q on (r_{q-1}, r_q]; the condition can only fail there if
    // r_{q-1} < g(q), and r_{q-1} / g(q) increases with q.
    for (long long q = 1;; ++q) {
        const double lo = radius_of_m(static_cast<double>(q - 1));
        const double gq = g(q);
        if (lo >= gq) break;
        if (q > 100000000) throw std::runtime_error("radius_constant: step search did not terminate");
        out.cond2 = std::max(out.cond2, std::min(radius_of_m(static_cast<double>(q)), gq));
    }
    out.value = std::max(out.cond1, out.cond2);
    return out;
}

std::string bound_table_csv(const std::vector<BoundRow>& rows) {
    std::ostringstream out;
    out << "name,params,r,value,vacuous,in_hypothesis\n";
    for (const auto& b : rows) {
        out << b.name << ",\"" << b.params << "\"," << format_real(b.r) << ','
            << format_real(b.value) << ',' << (b.vacuous ? "true" : "false") << ','
            << (b.in_hypothesis ? "true" : "false") << '\n';
    }
    return out.str();
}

}  // namespace rankbm
