// SPDX-License-Identifier: Apache-2.0
//
// Market weights, the slope of the capital distribution curve, stationary
// spacing laws and ensemble tail summaries.
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rankbm/core.hpp"

namespace rankbm {

/// mu_i = exp(X_(K-i+1)) / sum_j exp(X_(j)), largest first. `ordered` must be
/// ascending.
std::vector<double> market_weights(std::span<const double> ordered);

/// xi_i = X_(K-i+1) - X_(K-i), i = 1..J-1, from an ascending configuration.
std::vector<double> top_spacings(std::span<const double> ordered, int J);

/// sum_{i=1}^{J-1} log(J!/i!) xi_i / sum_{i=2}^{J} log^2 i.
double slope_from_spacings(std::span<const double> xi, int J);

/// Through-origin regression of log mu_1 - log mu_i on log i, i = 2..J.
double slope_direct_ols(std::span<const double> mu, int J);

/// alpha(t_k) for every recorded point of an ordered path.
std::vector<double> slope_path(const GridPath& ordered, int J);

double path_supremum(const GridPath& f, std::size_t component);

/// 2 alpha_j, alpha_j = sum_{i<=j} (mean(delta) - delta_{K-i+1}), j = 1..K-1.
/// Throws std::domain_error naming j when some alpha_j <= 0.
std::vector<double> stationary_spacing_rates(std::span<const double> drifts);

/// sup_x |F_n(x) - (1 - exp(-rate x))|.
double ks_distance_exponential(std::vector<double> samples, double rate);

/// Asymptotic one-sample critical value at level `alpha` with Stephens'
/// finite-n correction, sqrt(-log(alpha/2)/2) / (sqrt n + 0.12 + 0.11/sqrt n).
double ks_critical_value(std::size_t n, double alpha);

struct EnsembleSummary {
    std::string name;
    std::map<std::string, double> params;
    std::vector<double> values;
    double median = 0.0;
    double scale = 1.0;
    std::vector<double> radii;
    std::vector<double> frequencies;
    std::vector<double> stderrs;
    std::size_t n = 0;
};

/// Lower median m of `values` and, for each r, the fraction of values
/// strictly above m + r * scale with its binomial standard error.
EnsembleSummary ensemble_tail(std::string name, std::vector<double> values,
                              std::vector<double> radii, double scale = 1.0);

/// {"name","params","median","radii","frequencies","stderr","n"} on one line.
std::string to_jsonl(const EnsembleSummary& s);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::size_t n = 0;
    double m4 = 0.0;  // fourth central moment
    double stderr_mean() const;
    /// Standard error of the sample variance using the fourth central moment.
    double stderr_variance() const;
};

MeanVar mean_var(std::span<const double> v);

}  // namespace rankbm
