// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: a JSON spec (or a builtin preset) drives an ensemble of
// simulations, and every observable lands in its own CSV next to a JSONL
// summary and an optional bounds table.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankbm/bounds.hpp"
#include "rankbm/stats.hpp"

namespace rankbm {

struct DriftSpec {
    std::string kind = "atlas";  // atlas | equal | explicit
    double delta = 1.0;
    std::vector<double> values;  // explicit only
};

struct InitialSpec {
    std::string kind = "atlas";  // atlas | linear | lattice | poisson | zero | explicit
    double delta = 1.0;          // atlas
    double c = 1.0;              // linear
    int N = 1;                   // linear
    double density = 1.0;        // lattice, poisson
    std::vector<double> positions;
};

struct CrossingSpec {
    std::vector<std::string> kinds{"sigma", "tilde_sigma"};  // sigma | tilde_sigma | tau
    int sigma_m = 0;   // 0 means 4J + 1
    int tilde_m = 0;   // 0 means 2K/3 + 1
    int tau_m_max = 5;
};

struct HarrisSpec {
    double density = 1.0;
    double tolerance = 0.2;
};

struct ExperimentSpec {
    std::string name = "experiment";
    int K = 2;
    DriftSpec drifts;
    InitialSpec initial;
    double T = 1.0;
    long long steps = 1000;
    std::size_t replicates = 100;
    std::uint64_t seed = 1;
    std::string simulator = "auto";  // auto | named | ordered
    std::size_t record_stride = 1;
    std::vector<std::string> observables;  // gaps local_times weights slope crossings harris
    int J = 2;
    std::vector<double> radii{0.0};
    double burn_in = 0.0;
    double gap_tolerance = 0.05;
    int n = 2;  // leading components in the concentration observables
    CrossingSpec crossings;
    HarrisSpec harris;
    std::vector<std::string> bounds;
    bool checks = true;

    // run settings, not part of the hash
    unsigned threads = 0;
    std::string out = "rankbm-out";
    std::string format = "csv";  // csv | jsonl
};

/// Throws std::invalid_argument naming the offending field.
ExperimentSpec parse_spec(std::string_view json_text);
ExperimentSpec load_spec_file(const std::string& path);
void validate(const ExperimentSpec& spec);

/// Sorted-key JSON of every field that affects results.
std::string canonical_json(const ExperimentSpec& spec);
/// FNV-1a 64 of canonical_json, 16 hex digits.
std::string spec_hash(const ExperimentSpec& spec);
/// "rankbm <version> spec-hash=<hash>".
std::string provenance_line(const ExperimentSpec& spec);

std::vector<std::string> preset_names();
/// Throws std::invalid_argument for an unknown name.
ExperimentSpec preset(const std::string& name);

std::vector<double> resolve_drifts(const ExperimentSpec& spec);
std::vector<double> resolve_initial(const ExperimentSpec& spec, std::uint64_t replicate);

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct RunReport {
    std::string hash;
    std::vector<std::string> files;
    std::vector<CheckResult> checks;
    std::vector<EnsembleSummary> summaries;
    bool passed() const noexcept;
};

/// Writes into spec.out (created if missing). Deterministic given the spec.
RunReport run_experiment(const ExperimentSpec& spec);

/// weights[k] = market weights (largest first) at times[k]; rows
/// t,i,log_i,log_mu after the header line.
std::string emit_capital_curve(const std::vector<std::vector<double>>& weights,
                               std::span<const double> times);

struct BoundQuery {
    int K = 30;
    int J = 2;
    double delta = 1.0;
    double c = 1.0;
    double Delta = 0.0;
    int N = 2;
    double T = 1.0;
    int n = 2;
    std::vector<int> m{5};
    std::vector<double> radii{20.0};
    double m1 = -1.0;  // radius constants only when >= 0
    double m2 = -1.0;
};

/// The table behind the `bounds` subcommand.
std::vector<BoundRow> bound_rows(const BoundQuery& q);

}  // namespace rankbm
