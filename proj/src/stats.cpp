// SPDX-License-Identifier: Apache-2.0
#include "rankbm/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rankbm {

std::vector<double> market_weights(std::span<const double> ordered) {
    if (ordered.empty()) throw std::invalid_argument("market_weights: empty configuration");
    const std::size_t K = ordered.size();
    const double top = *std::max_element(ordered.begin(), ordered.end());
    std::vector<double> mu(K);
    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        mu[i] = std::exp(ordered[K - 1 - i] - top);
        total += mu[i];
    }
    for (double& m : mu) m /= total;
    return mu;
}

std::vector<double> top_spacings(std::span<const double> ordered, int J) {
    const int K = static_cast<int>(ordered.size());
    if (J < 2 || J > K) throw std::invalid_argument("top_spacings: need 2 <= J <= K");
    std::vector<double> xi(J - 1);
    for (int i = 1; i < J; ++i) xi[i - 1] = ordered[K - i] - ordered[K - i - 1];
    return xi;
}

namespace {

double sum_log_squared(int J) {
    double s = 0.0;
    for (int i = 2; i <= J; ++i) s += std::log(i) * std::log(i);
    return s;
}

}  // namespace

double slope_from_spacings(std::span<const double> xi, int J) {
    if (J < 2) throw std::invalid_argument("slope_from_spacings: J must be >= 2");
    if (xi.size() != static_cast<std::size_t>(J - 1)) {
        throw std::invalid_argument("slope_from_spacings: need J-1 spacings");
    }
    // log(J!/i!) = sum_{l=i+1}^{J} log l, accumulated from the top
    std::vector<double> w(J + 1, 0.0);
    for (int i = J - 1; i >= 1; --i) w[i] = w[i + 1] + std::log(i + 1);
    double num = 0.0;
    for (int i = 1; i < J; ++i) num += w[i] * xi[i - 1];
    return num / sum_log_squared(J);
}

double slope_direct_ols(std::span<const double> mu, int J) {
    if (J < 2 || static_cast<std::size_t>(J) > mu.size()) {
        throw std::invalid_argument("slope_direct_ols: need 2 <= J <= K");
    }
    const double l1 = std::log(mu[0]);
    double num = 0.0;
    for (int i = 2; i <= J; ++i) num += std::log(i) * (l1 - std::log(mu[i - 1]));
    return num / sum_log_squared(J);
}

std::vector<double> slope_path(const GridPath& ordered, int J) {
    std::vector<double> a(ordered.points());
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = slope_from_spacings(top_spacings(ordered.row(k), J), J);
    }
    return a;
}

double path_supremum(const GridPath& f, std::size_t component) {
    if (component >= f.dim()) throw std::out_of_range("path_supremum: component out of range");
    double best = f(0, component);
    for (std::size_t k = 1; k < f.points(); ++k) best = std::max(best, f(k, component));
    return best;
}

std::vector<double> stationary_spacing_rates(std::span<const double> drifts) {
    const std::size_t K = drifts.size();
    if (K < 2) throw std::invalid_argument("stationary_spacing_rates: need K >= 2");
    double mean = 0.0;
    for (double d : drifts) mean += d;
    mean /= static_cast<double>(K);
    std::vector<double> rates(K - 1);
    double alpha = 0.0;
    for (std::size_t j = 1; j < K; ++j) {
        alpha += mean - drifts[K - j];
        if (!(alpha > 0.0)) {
            throw std::domain_error("stationary_spacing_rates: alpha_" + std::to_string(j) +
                                    " = " + format_real(alpha) + " is not positive");
        }
        rates[j - 1] = 2.0 * alpha;
    }
    return rates;
}

double ks_distance_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw std::invalid_argument("ks_distance_exponential: empty sample");
    if (!(rate > 0.0)) throw std::invalid_argument("ks_distance_exponential: rate must be > 0");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] < 0.0) throw std::invalid_argument("ks_distance_exponential: negative sample");
        const double f = -std::expm1(-rate * samples[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

double ks_critical_value(std::size_t n, double alpha) {
    if (n == 0) throw std::invalid_argument("ks_critical_value: n must be positive");
    const double rn = std::sqrt(static_cast<double>(n));
    return std::sqrt(-std::log(alpha / 2.0) / 2.0) / (rn + 0.12 + 0.11 / rn);
}

EnsembleSummary ensemble_tail(std::string name, std::vector<double> values,
                              std::vector<double> radii, double scale) {
    if (values.empty()) throw std::invalid_argument("ensemble_tail: empty input");
    if (values.size() < 2) throw std::invalid_argument("ensemble_tail: need at least two replicates");
    EnsembleSummary s;
    s.name = std::move(name);
    s.n = values.size();
    s.scale = scale;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.median = sorted[(sorted.size() - 1) / 2];
    const double n = static_cast<double>(s.n);
    for (double r : radii) {
        const double level = s.median + r * scale;
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), level);
        const double p = static_cast<double>(above) / n;
        s.frequencies.push_back(p);
        s.stderrs.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    s.values = std::move(values);
    s.radii = std::move(radii);
    return s;
}

std::string to_jsonl(const EnsembleSummary& s) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["params"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.params) j["params"][k] = v;
    j["median"] = s.median;
    j["radii"] = s.radii;
    j["frequencies"] = s.frequencies;
    j["stderr"] = s.stderrs;
    j["n"] = s.n;
    return j.dump();
}

MeanVar mean_var(std::span<const double> v) {
    MeanVar r;
    r.n = v.size();
    if (r.n < 2) throw std::invalid_argument("mean_var: need at least two values");
    double s = 0.0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(r.n);
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double c = (x - r.mean) * (x - r.mean);
        m2 += c;
        m4 += c * c;
    }
    r.variance = m2 / static_cast<double>(r.n - 1);
    r.m4 = m4 / static_cast<double>(r.n);
    return r;
}

double MeanVar::stderr_mean() const { return std::sqrt(variance / static_cast<double>(n)); }

double MeanVar::stderr_variance() const {
    const double nn = static_cast<double>(n);
    const double s2 = variance * (nn - 1.0) / nn;
    return std::sqrt(std::max(m4 - s2 * s2, 0.0) / nn);
}

}  // namespace rankbm
