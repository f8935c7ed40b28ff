// SPDX-License-Identifier: Apache-2.0
//
// Closed-form tail bounds. Values are raw (possibly > 1); vacuous() and
// in_hypothesis let tables show where a bound says something.
#pragma once

#include <string>
#include <vector>

namespace rankbm {

struct BoundValue {
    double value = 0.0;
    bool in_hypothesis = true;
    bool vacuous() const noexcept { return !(value < 1.0); }
};

inline constexpr double kMuPrime = 125.0 * 400.0;  // 5^3 * 400
inline constexpr double kMu = 8.0 * kMuPrime;

/// J^3 (sum_{i=1}^{J-1} log(J!/i!) / sum_{i=2}^{J} log^2 i)^2.
double c_alpha(int J);

/// 2 exp(-r^2 delta^2 / (mu C_alpha(J))); hypothesis J < K/15.
BoundValue slope_tail_bound(int K, int J, double delta, double r);

/// Smallest r with slope_tail_bound < 1.
double slope_informative_radius(int J, double delta);

/// 1/2 + 17 sqrt(K) e^{-K/500}.
double slope_median_bound(int K);

/// 6 J^2 K^{-3/2} e^{-K/50}; hypothesis K >= 30.
BoundValue sigma_bound(int K, int J);

/// 11 sqrt(K) e^{-K/500}.
BoundValue tilde_sigma_bound(int K);

/// N T / (c (c m - c - Delta T)) exp(-(c m - c - Delta T)^2 / (2T));
/// hypothesis m >= Delta T / c + 1.
BoundValue tau_bound(double c, double Delta, int N, double T, int m);

enum class ConcentrationKind { local_time, gaps };

struct FiniteConcentration {
    double threshold = 0.0;
    double value = 0.0;
    bool above_threshold = false;
};

/// Constant of the transport inequality obeyed by the first n-1 local times
/// (or gaps) of a K-particle system on [0, T]: 2^6 (K-1)^5 T / (n-1), times 9
/// for gaps.
double finite_qtci_constant(int K, int n, double T, ConcentrationKind kind);

/// Threshold 2 sqrt(2 C log 2) and tail exp(-r^2 / (8 C)) for the constant
/// above.
FiniteConcentration finite_concentration_bound(int K, int n, double T, double r,
                                               ConcentrationKind kind);

/// 2^{18/7} 3^{5/7} for local times, 2^{18/7} 3^{9/7} for gaps.
double infinite_exponent_denominator(ConcentrationKind kind);
/// 14 and 25.
double infinite_exponent_denominator_rounded(ConcentrationKind kind);

struct InfiniteExponent {
    double sharp = 0.0;    // exact denominator
    double rounded = 0.0;  // rounded denominator
};

/// r^{4/7} (n-1)^{2/7} c^{10/7} / (den T).
InfiniteExponent infinite_concentration_exponent(double c, int n, double T, double r,
                                                 ConcentrationKind kind);

/// m_1(r) = (3(n-1) / (2^9 c^2))^{1/7} r^{2/7} and
/// m_2(r) = ((n-1) / (2^9 3 c^2))^{1/7} r^{2/7}.
double m_of_r(double c, int n, double r, ConcentrationKind kind);

struct RadiusConstant {
    double value = 0.0;  // max(cond1, cond2)
    double cond1 = 0.0;  // smallest r with m(r) >= m_in
    double cond2 = 0.0;  // r >= factor 2^4 sqrt(2 (N + ceil m(r) - 1)^5 T log 2 / (n-1)) beyond it
};

/// C_1 (local times) or C_2 (gaps) for user-supplied m_1 / m_2.
RadiusConstant radius_constant(double c, int n, int N, double T, double m_in,
                               ConcentrationKind kind);

struct BoundRow {
    std::string name;
    std::string params;
    double r = 0.0;
    double value = 0.0;
    bool vacuous = true;
    bool in_hypothesis = true;
};

/// CSV with header name,params,r,value,vacuous,in_hypothesis.
std::string bound_table_csv(const std::vector<BoundRow>& rows);

}  // namespace rankbm
