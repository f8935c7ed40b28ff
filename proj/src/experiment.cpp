// SPDX-License-Identifier: Apache-2.0
#include "rankbm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rankbm/core.hpp"
#include "rankbm/parallel.hpp"
#include "rankbm/simulate.hpp"

namespace rankbm {

using nlohmann::json;

namespace {

const std::set<std::string> kObservables{"gaps", "local_times", "weights", "slope", "crossings", "harris"};
const std::set<std::string> kBounds{"slope_tail",     "sigma",         "tilde_sigma",       "tau",
                                    "finite_local_time", "finite_gaps", "infinite_local_time",
                                    "infinite_gaps",  "C1",            "C2"};

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
    throw std::invalid_argument("spec field '" + field + "': " + what);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& prefix = "") {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        bad_field(prefix + key, "wrong type");
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) bad_field(prefix + it.key(), "unknown field");
    }
}

bool has(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

json to_json(const ExperimentSpec& s) {
    json j;
    j["name"] = s.name;
    j["K"] = s.K;
    j["drifts"] = {{"kind", s.drifts.kind}, {"delta", s.drifts.delta}, {"values", s.drifts.values}};
    j["initial"] = {{"kind", s.initial.kind},       {"delta", s.initial.delta},
                    {"c", s.initial.c},             {"N", s.initial.N},
                    {"density", s.initial.density}, {"positions", s.initial.positions}};
    j["T"] = s.T;
    j["steps"] = s.steps;
    j["replicates"] = s.replicates;
    j["seed"] = s.seed;
    j["simulator"] = s.simulator;
    j["record_stride"] = s.record_stride;
    j["observables"] = s.observables;
    j["J"] = s.J;
    j["radii"] = s.radii;
    j["burn_in"] = s.burn_in;
    j["gap_tolerance"] = s.gap_tolerance;
    j["n"] = s.n;
    j["crossings"] = {{"kinds", s.crossings.kinds},
                      {"sigma_m", s.crossings.sigma_m},
                      {"tilde_m", s.crossings.tilde_m},
                      {"tau_m_max", s.crossings.tau_m_max}};
    j["harris"] = {{"density", s.harris.density}, {"tolerance", s.harris.tolerance}};
    j["bounds"] = s.bounds;
    j["checks"] = s.checks;
    j["format"] = s.format;
    return j;
}

std::string params_string(std::initializer_list<std::pair<const char*, double>> kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        if (!out.empty()) out += ';';
        out += k;
        out += '=';
        out += format_real(v);
    }
    return out;
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

double tail_delta(const std::vector<double>& d) {
    double out = 0.0;
    for (double v : d) out = std::max(out, std::abs(v - d.back()));
    return out;
}

// smallest stride dividing `steps` that leaves at most `cap` intervals
std::size_t thinning(std::size_t steps, std::size_t cap) {
    for (std::size_t s = 1; s <= steps; ++s) {
        if (steps % s == 0 && steps / s <= cap) return s;
    }
    return steps;
}

struct Replicate {
    std::vector<std::vector<double>> gap_samples;
    std::vector<double> local_T;
    double lt_norm = 0.0;
    double gap_norm = 0.0;
    double slope_sup = 0.0;
    std::optional<double> sigma;
    std::optional<double> tilde;
    std::vector<std::optional<double>> tau;
};

struct Writer {
    const ExperimentSpec& spec;
    std::filesystem::path dir;
    std::string header;
    RunReport& report;

    std::ofstream open(const std::string& name) {
        const auto path = dir / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        report.files.push_back(path.string());
        return f;
    }
    void csv(const std::string& name, const std::string& body) {
        auto f = open(name);
        f << "# " << header << '\n' << body;
        if (!f) throw std::runtime_error("write failed: " + (dir / name).string());
    }
    void path(const std::string& name, const GridPath& p) {
        const std::size_t s = thinning(p.grid().steps(), 1000);
        write_csv_file((dir / name).string(), p.subsampled(s), {header});
        report.files.push_back((dir / name).string());
    }
};

void check(RunReport& r, bool enabled, std::string name, bool ok, std::string detail) {
    if (enabled) r.checks.push_back({std::move(name), ok, std::move(detail)});
}

// frequency <= bound + 3 se wherever the bound says something and applies
bool consistent(double freq, double se, const BoundValue& b) {
    return freq <= b.value + 3.0 * se;
}

}  // namespace

bool RunReport::passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ExperimentSpec parse_spec(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("spec is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("spec must be a JSON object");
    reject_unknown(j,
                   {"name", "K", "drifts", "initial", "T", "steps", "replicates", "seed", "simulator",
                    "record_stride", "observables", "J", "radii", "burn_in", "gap_tolerance", "n",
                    "crossings", "harris", "bounds", "checks", "threads", "out", "format"},
                   "");
    ExperimentSpec s;
    read(j, "name", s.name);
    read(j, "K", s.K);
    if (auto it = j.find("drifts"); it != j.end()) {
        if (it->is_array()) {
            s.drifts.kind = "explicit";
            read(j, "drifts", s.drifts.values);
        } else if (it->is_object()) {
            reject_unknown(*it, {"kind", "delta", "values"}, "drifts.");
            read(*it, "kind", s.drifts.kind, "drifts.");
            read(*it, "delta", s.drifts.delta, "drifts.");
            read(*it, "values", s.drifts.values, "drifts.");
        } else {
            bad_field("drifts", "expected an array or an object");
        }
    }
    if (auto it = j.find("initial"); it != j.end()) {
        if (!it->is_object()) bad_field("initial", "expected an object");
        reject_unknown(*it, {"kind", "delta", "c", "N", "density", "positions"}, "initial.");
        read(*it, "kind", s.initial.kind, "initial.");
        read(*it, "delta", s.initial.delta, "initial.");
        read(*it, "c", s.initial.c, "initial.");
        read(*it, "N", s.initial.N, "initial.");
        read(*it, "density", s.initial.density, "initial.");
        read(*it, "positions", s.initial.positions, "initial.");
    }
    read(j, "T", s.T);
    read(j, "steps", s.steps);
    read(j, "replicates", s.replicates);
    read(j, "seed", s.seed);
    read(j, "simulator", s.simulator);
    read(j, "record_stride", s.record_stride);
    read(j, "observables", s.observables);
    read(j, "J", s.J);
    read(j, "radii", s.radii);
    read(j, "burn_in", s.burn_in);
    read(j, "gap_tolerance", s.gap_tolerance);
    read(j, "n", s.n);
    if (auto it = j.find("crossings"); it != j.end()) {
        if (!it->is_object()) bad_field("crossings", "expected an object");
        reject_unknown(*it, {"kinds", "sigma_m", "tilde_m", "tau_m_max"}, "crossings.");
        read(*it, "kinds", s.crossings.kinds, "crossings.");
        read(*it, "sigma_m", s.crossings.sigma_m, "crossings.");
        read(*it, "tilde_m", s.crossings.tilde_m, "crossings.");
        read(*it, "tau_m_max", s.crossings.tau_m_max, "crossings.");
    }
    if (auto it = j.find("harris"); it != j.end()) {
        if (!it->is_object()) bad_field("harris", "expected an object");
        reject_unknown(*it, {"density", "tolerance"}, "harris.");
        read(*it, "density", s.harris.density, "harris.");
        read(*it, "tolerance", s.harris.tolerance, "harris.");
    }
    read(j, "bounds", s.bounds);
    read(j, "checks", s.checks);
    read(j, "threads", s.threads);
    read(j, "out", s.out);
    read(j, "format", s.format);
    validate(s);
    return s;
}

ExperimentSpec load_spec_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_spec(ss.str());
}

void validate(const ExperimentSpec& s) {
    if (s.K < 1) bad_field("K", "must be >= 1");
    if (!(s.T > 0.0)) bad_field("T", "must be > 0");
    if (s.steps < 1) bad_field("steps", "must be >= 1");
    if (s.replicates < 1) bad_field("replicates", "must be >= 1");
    if (s.record_stride < 1 || static_cast<std::size_t>(s.steps) % s.record_stride != 0) {
        bad_field("record_stride", "must divide steps");
    }
    if (s.observables.empty()) bad_field("observables", "must not be empty");
    for (const auto& o : s.observables) {
        if (!kObservables.count(o)) bad_field("observables", "unknown observable '" + o + "'");
    }
    for (const auto& b : s.bounds) {
        if (!kBounds.count(b)) bad_field("bounds", "unknown bound '" + b + "'");
    }
    for (const auto& c : s.crossings.kinds) {
        if (c != "sigma" && c != "tilde_sigma" && c != "tau") {
            bad_field("crossings.kinds", "unknown crossing '" + c + "'");
        }
    }
    if (s.simulator != "auto" && s.simulator != "named" && s.simulator != "ordered") {
        bad_field("simulator", "expected auto, named or ordered");
    }
    if (s.simulator == "named" && has(s.observables, "local_times")) {
        bad_field("simulator", "local_times need the ordered simulator");
    }
    if (s.simulator == "ordered" && has(s.observables, "crossings")) {
        bad_field("simulator", "crossings need the named simulator");
    }
    if (has(s.observables, "local_times") && has(s.observables, "crossings")) {
        bad_field("observables", "local_times and crossings need different simulators");
    }
    if (s.format != "csv" && s.format != "jsonl") bad_field("format", "expected csv or jsonl");
    if (s.drifts.kind != "atlas" && s.drifts.kind != "equal" && s.drifts.kind != "explicit") {
        bad_field("drifts.kind", "expected atlas, equal or explicit");
    }
    if (s.drifts.kind == "explicit" && static_cast<int>(s.drifts.values.size()) != s.K) {
        bad_field("drifts.values", "need K entries");
    }
    const std::set<std::string> inits{"atlas", "linear", "lattice", "poisson", "zero", "explicit"};
    if (!inits.count(s.initial.kind)) bad_field("initial.kind", "unknown kind '" + s.initial.kind + "'");
    if (s.initial.kind == "explicit") {
        if (static_cast<int>(s.initial.positions.size()) != s.K) bad_field("initial.positions", "need K entries");
        if (!std::is_sorted(s.initial.positions.begin(), s.initial.positions.end())) {
            bad_field("initial.positions", "must be nondecreasing");
        }
    }
    if (s.initial.kind == "atlas" && !(s.initial.delta > 0.0)) bad_field("initial.delta", "must be > 0");
    if (s.initial.kind == "atlas" && s.K < 2) bad_field("K", "atlas initial positions need K >= 2");
    if (s.initial.kind == "linear" && (s.initial.N < 1 || s.initial.N > s.K || !(s.initial.c > 0.0))) {
        bad_field("initial", "linear needs 1 <= N <= K and c > 0");
    }
    if ((s.initial.kind == "lattice" || s.initial.kind == "poisson") && !(s.initial.density > 0.0)) {
        bad_field("initial.density", "must be > 0");
    }
    const bool needs_J = has(s.observables, "slope") || has(s.observables, "weights") ||
                         (has(s.observables, "crossings") && has(s.crossings.kinds, "sigma"));
    if (needs_J && (s.J < 2 || s.J > s.K)) bad_field("J", "must satisfy 2 <= J <= K");
    if ((has(s.observables, "gaps") || has(s.observables, "local_times")) && s.K < 2) {
        bad_field("K", "gap observables need K >= 2");
    }
    if (has(s.observables, "local_times") || has(s.observables, "gaps")) {
        if (s.n < 2 || s.n > s.K) bad_field("n", "must satisfy 2 <= n <= K");
    }
    if (s.burn_in < 0.0 || s.burn_in >= s.T) {
        if (s.burn_in != 0.0) bad_field("burn_in", "must lie in [0, T)");
    }
    if (!(s.gap_tolerance > 0.0)) bad_field("gap_tolerance", "must be > 0");
    if (s.crossings.tau_m_max < 0) bad_field("crossings.tau_m_max", "must be >= 0");
    if (has(s.observables, "crossings") && has(s.crossings.kinds, "tau") && s.initial.kind != "linear") {
        bad_field("crossings.kinds", "tau needs linear initial positions");
    }
    if (!(s.harris.density > 0.0)) bad_field("harris.density", "must be > 0");
    if (!(s.harris.tolerance > 0.0)) bad_field("harris.tolerance", "must be > 0");
    if (s.drifts.kind != "explicit" && !(std::isfinite(s.drifts.delta))) bad_field("drifts.delta", "must be finite");
}

std::string canonical_json(const ExperimentSpec& spec) { return to_json(spec).dump(); }

std::string spec_hash(const ExperimentSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_json(spec)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string provenance_line(const ExperimentSpec& spec) {
    return std::string("rankbm ") + RANKBM_VERSION + " spec-hash=" + spec_hash(spec);
}

std::vector<std::string> preset_names() {
    return {"stationarity-atlas-10", "slope-concentration-30-2", "crossings-atlas-30",
            "finite-local-time",     "tau-linear",               "harris-scaling"};
}

ExperimentSpec preset(const std::string& name) {
    ExperimentSpec s;
    s.name = name;
    if (name == "stationarity-atlas-10") {
        s.K = 10;
        s.drifts = {"atlas", 1.0, {}};
        s.initial.kind = "atlas";
        s.T = 3300.0;
        s.steps = 1320000;
        s.record_stride = 120000;
        s.burn_in = 600.0;
        s.replicates = 500;
        s.simulator = "named";
        s.observables = {"gaps"};
        s.radii = {};
    } else if (name == "slope-concentration-30-2") {
        s.K = 30;
        s.J = 2;
        s.drifts = {"atlas", 1.0, {}};
        s.T = 30.0;
        s.steps = 3000;
        s.replicates = 1000;
        s.simulator = "named";
        s.observables = {"slope", "weights"};
        s.radii = {0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 2200.0, 5000.0};
        s.bounds = {"slope_tail"};
    } else if (name == "crossings-atlas-30") {
        s.K = 30;
        s.J = 2;
        s.drifts = {"atlas", 1.0, {}};
        s.T = 30.0;
        s.steps = 3000;
        s.replicates = 1000;
        s.simulator = "named";
        s.observables = {"crossings"};
        s.crossings.kinds = {"sigma", "tilde_sigma"};
        s.radii = {};
        s.bounds = {"sigma", "tilde_sigma"};
    } else if (name == "finite-local-time") {
        s.K = 3;
        s.n = 3;
        s.drifts = {"explicit", 1.0, {1.0, 0.0, 0.0}};
        s.initial.kind = "zero";
        s.T = 1.0;
        s.steps = 1000;
        s.replicates = 2000;
        s.simulator = "ordered";
        s.observables = {"local_times", "gaps"};
        s.radii = {0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 80.0, 240.0};
        s.bounds = {"finite_local_time", "finite_gaps"};
    } else if (name == "tau-linear") {
        s.K = 40;
        s.drifts = {"explicit", 1.0, std::vector<double>(40, 0.0)};
        s.drifts.values[0] = 1.0;
        s.initial.kind = "linear";
        s.initial.c = 1.0;
        s.initial.N = 2;
        s.T = 1.0;
        s.steps = 1000;
        s.replicates = 1000;
        s.simulator = "named";
        s.observables = {"crossings"};
        s.crossings.kinds = {"tau"};
        s.crossings.tau_m_max = 8;
        s.radii = {};
        s.bounds = {"tau"};
    } else if (name == "harris-scaling") {
        s.K = 1000;
        s.drifts = {"equal", 0.5, {}};
        s.initial.kind = "lattice";
        s.T = 100.0;
        s.steps = 100;
        s.replicates = 2000;
        s.simulator = "named";
        s.observables = {"harris"};
        s.radii = {};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    validate(s);
    return s;
}

std::vector<double> resolve_drifts(const ExperimentSpec& s) {
    if (s.drifts.kind == "explicit") return s.drifts.values;
    std::vector<double> d(s.K, s.drifts.kind == "equal" ? s.drifts.delta : 0.0);
    if (s.drifts.kind == "atlas") d[0] = s.drifts.delta;
    return d;
}

std::vector<double> resolve_initial(const ExperimentSpec& s, std::uint64_t replicate) {
    const auto& in = s.initial;
    if (in.kind == "atlas") return atlas_initial_positions(s.K, in.delta);
    if (in.kind == "linear") return linear_initial_positions(s.K, in.c, in.N);
    if (in.kind == "lattice") return lattice_initial_positions(s.K, in.density);
    if (in.kind == "poisson") return poisson_initial_positions(s.K, in.density, s.seed, replicate);
    if (in.kind == "explicit") return in.positions;
    return std::vector<double>(s.K, 0.0);
}

std::string emit_capital_curve(const std::vector<std::vector<double>>& weights,
                               std::span<const double> times) {
    if (weights.size() != times.size()) throw std::invalid_argument("emit_capital_curve: size mismatch");
    std::string out = "t,i,log_i,log_mu\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t i = 0; i < weights[k].size(); ++i) {
            out += format_real(times[k]) + ',' + std::to_string(i + 1) + ',' +
                   format_real(std::log(static_cast<double>(i + 1))) + ',' +
                   format_real(std::log(weights[k][i])) + '\n';
        }
    }
    return out;
}

std::vector<BoundRow> bound_rows(const BoundQuery& q) {
    std::vector<BoundRow> rows;
    auto push = [&](std::string name, std::string params, double r, const BoundValue& b) {
        rows.push_back({std::move(name), std::move(params), r, b.value, b.vacuous(), b.in_hypothesis});
    };
    for (double r : q.radii) {
        push("slope_tail", params_string({{"K", q.K}, {"J", q.J}, {"delta", q.delta}}), r,
             slope_tail_bound(q.K, q.J, q.delta, r));
    }
    push("sigma", params_string({{"K", q.K}, {"J", q.J}}), 0.0, sigma_bound(q.K, q.J));
    push("tilde_sigma", params_string({{"K", q.K}}), 0.0, tilde_sigma_bound(q.K));
    for (int m : q.m) {
        push("tau", params_string({{"c", q.c}, {"Delta", q.Delta}, {"N", q.N}, {"T", q.T}, {"m", m}}), 0.0,
             tau_bound(q.c, q.Delta, q.N, q.T, m));
    }
    for (auto kind : {ConcentrationKind::local_time, ConcentrationKind::gaps}) {
        const bool lt = kind == ConcentrationKind::local_time;
        for (double r : q.radii) {
            const auto f = finite_concentration_bound(q.K, q.n, q.T, r, kind);
            push(lt ? "finite_local_time" : "finite_gaps",
                 params_string({{"K", q.K}, {"n", q.n}, {"T", q.T}, {"threshold", f.threshold}}), r,
                 {f.value, f.above_threshold});
        }
    }
    // exponents and radii are not probabilities: never vacuous
    for (auto kind : {ConcentrationKind::local_time, ConcentrationKind::gaps}) {
        const bool lt = kind == ConcentrationKind::local_time;
        for (double r : q.radii) {
            if (!(r > 0.0)) continue;
            const auto e = infinite_concentration_exponent(q.c, q.n, q.T, r, kind);
            rows.push_back({lt ? "infinite_local_time" : "infinite_gaps",
                            params_string({{"c", q.c}, {"n", q.n}, {"T", q.T}, {"rounded", e.rounded}}), r,
                            e.sharp, false, true});
        }
    }
    if (q.m1 >= 0.0) {
        const auto c = radius_constant(q.c, q.n, q.N, q.T, q.m1, ConcentrationKind::local_time);
        rows.push_back({"C1", params_string({{"c", q.c}, {"n", q.n}, {"N", q.N}, {"T", q.T}, {"m1", q.m1}}), 0.0,
                        c.value, false, true});
    }
    if (q.m2 >= 0.0) {
        const auto c = radius_constant(q.c, q.n, q.N, q.T, q.m2, ConcentrationKind::gaps);
        rows.push_back({"C2", params_string({{"c", q.c}, {"n", q.n}, {"N", q.N}, {"T", q.T}, {"m2", q.m2}}), 0.0,
                        c.value, false, true});
    }
    return rows;
}

RunReport run_experiment(const ExperimentSpec& spec) {
    validate(spec);
    RunReport report;
    report.hash = spec_hash(spec);
    const int K = spec.K;
    const auto drifts = resolve_drifts(spec);
    const TimeGrid grid(spec.T, static_cast<std::size_t>(spec.steps));
    const bool want_gaps = has(spec.observables, "gaps");
    const bool want_lt = has(spec.observables, "local_times");
    const bool want_weights = has(spec.observables, "weights");
    const bool want_slope = has(spec.observables, "slope");
    const bool want_cross = has(spec.observables, "crossings");
    const bool want_harris = has(spec.observables, "harris");
    const bool ordered = spec.simulator == "ordered" || (spec.simulator == "auto" && want_lt);
    const bool simulate = want_gaps || want_lt || want_weights || want_slope || want_cross;
    const double delta = spec.drifts.kind == "explicit" ? drifts[0] : spec.drifts.delta;
    const bool on_horizon = delta != 0.0 && std::abs(spec.T - K / (delta * delta)) <= 1e-9 * spec.T;
    const int sigma_m = spec.crossings.sigma_m > 0 ? spec.crossings.sigma_m : 4 * spec.J + 1;
    const int tilde_m = spec.crossings.tilde_m > 0 ? spec.crossings.tilde_m : 2 * K / 3 + 1;
    const bool cross_sigma = want_cross && has(spec.crossings.kinds, "sigma");
    const bool cross_tilde = want_cross && has(spec.crossings.kinds, "tilde_sigma");
    const bool cross_tau = want_cross && has(spec.crossings.kinds, "tau");
    if (cross_sigma && spec.J + sigma_m > K) bad_field("crossings.sigma_m", "need J + m <= K");
    if (cross_tilde && tilde_m > K) bad_field("crossings.tilde_m", "need m <= K");

    std::filesystem::create_directories(spec.out);
    const bool tables = spec.format == "csv";
    Writer w{spec, spec.out, provenance_line(spec), report};
    std::optional<OrderedTrajectory> first;

    auto run_one = [&](std::size_t rep) {
        SystemConfig cfg{K, drifts, resolve_initial(spec, rep), grid, spec.seed, rep};
        OrderedTrajectory traj = [&] {
            if (ordered) {
                auto t = simulate_ordered(cfg);
                if (spec.record_stride == 1) return t;
                OrderedTrajectory thin{t.ordered.subsampled(spec.record_stride), std::nullopt, std::nullopt, {}};
                if (t.gaps) thin.gaps = t.gaps->subsampled(spec.record_stride);
                if (t.local_times) thin.local_times = t.local_times->subsampled(spec.record_stride);
                return thin;
            }
            SimulationOptions opt;
            opt.record_stride = spec.record_stride;
            opt.record_ranks = want_cross;
            return simulate_named(cfg, opt);
        }();
        Replicate r;
        const TimeGrid& rec = traj.ordered.grid();
        if (want_gaps || want_lt) {
            const GridPath& g = *traj.gaps;
            r.gap_samples.resize(K - 1);
            for (std::size_t k = 0; k < rec.size(); ++k) {
                const bool take = spec.burn_in > 0.0 ? rec.time(k) >= spec.burn_in : k + 1 == rec.size();
                if (!take) continue;
                for (int i = 0; i + 1 < K; ++i) r.gap_samples[i].push_back(g(k, i));
            }
            GridPath lead(rec, spec.n - 1);
            for (std::size_t k = 0; k < rec.size(); ++k) {
                for (int i = 0; i + 1 < spec.n; ++i) lead(k, i) = g(k, i);
            }
            r.gap_norm = norm_t2(lead);
        }
        if (want_lt) {
            const GridPath& L = *traj.local_times;
            r.local_T.assign(L.row(rec.size() - 1).begin(), L.row(rec.size() - 1).end());
            GridPath lead(rec, spec.n - 1);
            for (std::size_t k = 0; k < rec.size(); ++k) {
                for (int i = 0; i + 1 < spec.n; ++i) lead(k, i) = L(k, i);
            }
            r.lt_norm = norm_t2(lead);
        }
        if (want_slope) {
            const auto a = slope_path(traj.ordered, spec.J);
            r.slope_sup = *std::max_element(a.begin(), a.end());
        }
        if (cross_sigma) r.sigma = detect_crossing(traj, {CrossingKind::sigma, spec.J, sigma_m, 1});
        if (cross_tilde) r.tilde = detect_crossing(traj, {CrossingKind::tilde_sigma, 1, tilde_m, 1});
        if (cross_tau) {
            for (int m = 1; m <= spec.crossings.tau_m_max; ++m) {
                r.tau.push_back(detect_tau(traj, spec.initial.N, m).time);
            }
        }
        if (rep == 0) first.emplace(std::move(traj));
        return r;
    };

    std::vector<Replicate> reps;
    if (simulate) reps = parallel_map<Replicate>(spec.replicates, spec.threads, run_one);
    const std::size_t R = spec.replicates;

    auto summarize = [&](std::string name, std::vector<double> values, double scale,
                         std::map<std::string, double> params) -> std::optional<EnsembleSummary> {
        if (values.size() < 2) return std::nullopt;
        auto s = ensemble_tail(std::move(name), std::move(values), spec.radii, scale);
        s.params = std::move(params);
        report.summaries.push_back(s);
        return s;
    };
    auto binom_se = [](double f, std::size_t n) { return std::sqrt(f * (1.0 - f) / static_cast<double>(n)); };

    if (want_gaps) {
        std::optional<std::vector<double>> rates;
        try {
            rates = stationary_spacing_rates(drifts);
        } catch (const std::domain_error&) {
        }
        std::string body = "j,samples,mean,stderr,target,rel_err,ks,ks_critical\n";
        for (int i = 0; i + 1 < K; ++i) {
            std::vector<double> v;
            for (const auto& r : reps) v.insert(v.end(), r.gap_samples[i].begin(), r.gap_samples[i].end());
            const int j = K - 1 - i;  // top-down index of this gap
            double mean = 0.0, se = 0.0;
            if (v.size() >= 2) {
                const MeanVar mv = mean_var(v);
                mean = mv.mean;
                se = mv.stderr_mean();
            } else {
                mean = v.empty() ? 0.0 : v[0];
            }
            body += std::to_string(j) + ',' + std::to_string(v.size()) + ',' + format_real(mean) + ',' +
                    format_real(se);
            if (rates) {
                const double rate = (*rates)[j - 1];
                const double target = 1.0 / rate;
                const double rel = mean / target - 1.0;
                const double ks = ks_distance_exponential(v, rate);
                const double crit = ks_critical_value(v.size(), 0.01);
                body += ',' + format_real(target) + ',' + format_real(rel) + ',' + format_real(ks) + ',' +
                        format_real(crit) + '\n';
                if (spec.burn_in > 0.0) {
                    check(report, spec.checks, "gap " + std::to_string(j) + " mean",
                          std::abs(rel) <= spec.gap_tolerance,
                          "mean " + format_real(mean) + " target " + format_real(target));
                    check(report, spec.checks, "gap " + std::to_string(j) + " ks", ks < crit,
                          "D " + format_real(ks) + " critical " + format_real(crit));
                }
            } else {
                body += ",,,,\n";
            }
            summarize("gap_" + std::to_string(j), std::move(v), 1.0, {{"K", K}, {"j", j}, {"burn_in", spec.burn_in}});
        }
        if (tables) {
            w.csv("gaps.csv", body);
            w.path("gaps_path.csv", *first->gaps);
        }
    }

    auto concentration = [&](const char* label, ConcentrationKind kind, auto value_of) {
        std::vector<double> v;
        for (const auto& r : reps) v.push_back(value_of(r));
        auto s = summarize(label, v, 1.0, {{"K", K}, {"n", spec.n}, {"T", spec.T}});
        if (!s) return std::string();
        std::string body;
        for (std::size_t i = 0; i < spec.radii.size(); ++i) {
            const double r = spec.radii[i];
            const auto f = finite_concentration_bound(K, spec.n, spec.T, r, kind);
            const BoundValue b{f.value, f.above_threshold};
            body += std::string(label) + ',' + format_real(r) + ',' + format_real(s->median + r) + ',' +
                    format_real(s->frequencies[i]) + ',' + format_real(s->stderrs[i]) + ',' + format_real(f.value) +
                    ',' + yes_no(b.vacuous()) + ',' + yes_no(f.above_threshold) + '\n';
            if (!b.vacuous() && b.in_hypothesis) {
                check(report, spec.checks, std::string(label) + " r=" + format_real(r),
                      consistent(s->frequencies[i], s->stderrs[i], b),
                      "frequency " + format_real(s->frequencies[i]) + " bound " + format_real(f.value));
            }
        }
        return body;
    };

    if (want_lt || want_gaps) {
        std::string body = "functional,r,level,frequency,stderr,bound,vacuous,above_threshold\n";
        if (want_lt) {
            body += concentration("local_time_norm_t2", ConcentrationKind::local_time,
                                  [](const Replicate& r) { return r.lt_norm; });
        }
        body += concentration("gap_norm_t2", ConcentrationKind::gaps, [](const Replicate& r) { return r.gap_norm; });
        if (tables) w.csv("concentration.csv", body);
    }

    if (want_lt) {
        std::string body = "i,mean,stderr,variance\n";
        for (int i = 0; i + 1 < K; ++i) {
            std::vector<double> v;
            for (const auto& r : reps) v.push_back(r.local_T[i]);
            if (v.size() >= 2) {
                const MeanVar mv = mean_var(v);
                body += std::to_string(i + 1) + ',' + format_real(mv.mean) + ',' + format_real(mv.stderr_mean()) +
                        ',' + format_real(mv.variance) + '\n';
            } else {
                body += std::to_string(i + 1) + ',' + format_real(v[0]) + ",0,0\n";
            }
            summarize("local_time_" + std::to_string(i + 1) + "_T", std::move(v), 1.0, {{"K", K}, {"T", spec.T}});
        }
        if (tables) {
            w.csv("local_times.csv", body);
            w.path("local_times_path.csv", *first->local_times);
        }
    }

    if (want_weights && tables) {
        const GridPath& x = first->ordered;
        const std::size_t s = thinning(x.grid().steps(), 100);
        std::vector<std::vector<double>> mu;
        std::vector<double> times;
        for (std::size_t k = 0; k < x.points(); k += s) {
            mu.push_back(market_weights(x.row(k)));
            times.push_back(x.grid().time(k));
        }
        w.csv("capital_curve.csv", emit_capital_curve(mu, times));
    }

    if (want_slope) {
        std::vector<double> v;
        for (const auto& r : reps) v.push_back(r.slope_sup);
        const double scale = std::sqrt(static_cast<double>(K));
        auto s = summarize("alpha_bar", v, scale,
                           {{"K", K}, {"J", spec.J}, {"delta", delta}, {"median_bound", slope_median_bound(K)}});
        if (s) {
            std::string body = "r,level,frequency,stderr,bound,vacuous,in_hypothesis\n";
            for (std::size_t i = 0; i < spec.radii.size(); ++i) {
                const double r = spec.radii[i];
                BoundValue b = slope_tail_bound(K, spec.J, delta, r);
                b.in_hypothesis = b.in_hypothesis && on_horizon;
                body += format_real(r) + ',' + format_real(s->median + r * scale) + ',' +
                        format_real(s->frequencies[i]) + ',' + format_real(s->stderrs[i]) + ',' +
                        format_real(b.value) + ',' + yes_no(b.vacuous()) + ',' + yes_no(b.in_hypothesis) + '\n';
                if (!b.vacuous() && b.in_hypothesis) {
                    check(report, spec.checks, "slope tail r=" + format_real(r),
                          consistent(s->frequencies[i], s->stderrs[i], b),
                          "frequency " + format_real(s->frequencies[i]) + " bound " + format_real(b.value));
                }
            }
            if (tables) w.csv("slope.csv", body);
        }
        if (tables) {
            const auto a = slope_path(first->ordered, spec.J);
            w.path("slope_path.csv", GridPath(first->ordered.grid(), 1, a));
        }
    }

    if (want_cross) {
        std::string body = "event,params,frequency,stderr,bound,vacuous,in_hypothesis\n";
        auto row = [&](const std::string& event, const std::string& params, std::size_t hits, BoundValue b) {
            const double f = static_cast<double>(hits) / static_cast<double>(R);
            const double se = binom_se(f, R);
            body += event + ",\"" + params + "\"," + format_real(f) + ',' + format_real(se) + ',' +
                    format_real(b.value) + ',' + yes_no(b.vacuous()) + ',' + yes_no(b.in_hypothesis) + '\n';
            if (!b.vacuous() && b.in_hypothesis) {
                check(report, spec.checks, event + " " + params, consistent(f, se, b),
                      "frequency " + format_real(f) + " bound " + format_real(b.value));
            }
        };
        if (cross_sigma) {
            std::size_t hits = 0;
            std::vector<double> ind;
            for (const auto& r : reps) {
                hits += r.sigma.has_value();
                ind.push_back(r.sigma ? 1.0 : 0.0);
            }
            BoundValue b = sigma_bound(K, spec.J);
            b.in_hypothesis = b.in_hypothesis && on_horizon && sigma_m == 4 * spec.J + 1 &&
                              spec.drifts.kind == "atlas" && spec.initial.kind == "atlas";
            row("sigma", params_string({{"K", K}, {"J", spec.J}, {"m", sigma_m}}), hits, b);
            summarize("sigma_hit", ind, 1.0, {{"K", K}, {"J", spec.J}, {"m", sigma_m}});
        }
        if (cross_tilde) {
            std::size_t hits = 0;
            std::vector<double> ind;
            for (const auto& r : reps) {
                hits += r.tilde.has_value();
                ind.push_back(r.tilde ? 1.0 : 0.0);
            }
            BoundValue b = tilde_sigma_bound(K);
            b.in_hypothesis = on_horizon && tilde_m == 2 * K / 3 + 1 && spec.drifts.kind == "atlas" &&
                              spec.initial.kind == "atlas";
            row("tilde_sigma", params_string({{"K", K}, {"m", tilde_m}}), hits, b);
            summarize("tilde_sigma_hit", ind, 1.0, {{"K", K}, {"m", tilde_m}});
        }
        if (cross_tau) {
            const double Delta = tail_delta(drifts);
            for (int m = 1; m <= spec.crossings.tau_m_max; ++m) {
                std::size_t hits = 0;
                std::vector<double> ind;
                for (const auto& r : reps) {
                    hits += r.tau[m - 1].has_value();
                    ind.push_back(r.tau[m - 1] ? 1.0 : 0.0);
                }
                const BoundValue b = tau_bound(spec.initial.c, Delta, spec.initial.N, spec.T, m);
                row("tau", params_string({{"c", spec.initial.c}, {"Delta", Delta}, {"N", spec.initial.N},
                                          {"T", spec.T}, {"m", m}}),
                    hits, b);
                summarize("tau_hit_m" + std::to_string(m), ind, 1.0, {{"N", spec.initial.N}, {"m", m}});
            }
        }
        if (tables) w.csv("crossings.csv", body);
    }

    if (want_harris) {
        const double target = std::pow(2.0 / std::numbers::pi, 0.25) / std::sqrt(spec.harris.density);
        std::string body = "initial,samples,std,stderr,target,rel_err\n";
        for (const char* kind : {"lattice", "poisson"}) {
            const std::string k = kind;
            auto values = parallel_map<double>(R, spec.threads, [&](std::size_t rep) {
                std::vector<double> x0 = k == "lattice"
                                             ? lattice_initial_positions(K, spec.harris.density)
                                             : poisson_initial_positions(K, spec.harris.density, spec.seed, rep);
                SystemConfig cfg{K, drifts, x0, grid, spec.seed, rep};
                SimulationOptions opt;
                opt.record_stride = grid.steps();
                opt.record_ranks = false;
                const auto t = simulate_named(cfg, opt);
                const std::size_t mid = static_cast<std::size_t>(K / 2);
                return (t.ordered(1, mid) - t.ordered(0, mid)) / std::pow(spec.T, 0.25);
            });
            if (values.size() < 2) continue;
            const MeanVar mv = mean_var(values);
            const double sd = std::sqrt(mv.variance);
            const double se = mv.stderr_variance() / (2.0 * sd);
            const double rel = sd / target - 1.0;
            body += k + ',' + std::to_string(values.size()) + ',' + format_real(sd) + ',' + format_real(se) + ',' +
                    format_real(target) + ',' + format_real(rel) + '\n';
            check(report, spec.checks, "harris " + k, std::abs(rel) <= spec.harris.tolerance,
                  "std " + format_real(sd) + " target " + format_real(target));
            summarize("harris_" + k, values, 1.0, {{"K", K}, {"T", spec.T}, {"density", spec.harris.density}});
        }
        if (tables) w.csv("harris.csv", body);
    }

    if (!spec.bounds.empty() && tables) {
        BoundQuery q;
        q.K = K;
        q.J = std::max(spec.J, 2);
        q.delta = delta != 0.0 ? std::abs(delta) : 1.0;
        q.c = spec.initial.c;
        q.Delta = tail_delta(drifts);
        q.N = spec.initial.kind == "linear" ? spec.initial.N : std::max(spec.n, 2);
        q.T = spec.T;
        q.n = std::clamp(spec.n, 2, std::max(K, 2));
        q.m.clear();
        for (int m = 1; m <= spec.crossings.tau_m_max; ++m) q.m.push_back(m);
        q.radii = spec.radii;
        std::vector<BoundRow> rows;
        for (auto& row : bound_rows(q)) {
            if (has(spec.bounds, row.name)) rows.push_back(std::move(row));
        }
        w.csv("bounds.csv", bound_table_csv(rows));
    }

    {
        auto f = w.open("summary.jsonl");
        json meta = {{"meta", {{"software", std::string("rankbm ") + RANKBM_VERSION},
                               {"spec_hash", report.hash},
                               {"name", spec.name}}}};
        f << meta.dump() << '\n';
        for (const auto& s : report.summaries) f << to_jsonl(s) << '\n';
        json checks = json::array();
        for (const auto& c : report.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        f << json{{"checks", checks}}.dump() << '\n';
    }
    {
        auto f = w.open("spec.json");
        json j = {{"software", std::string("rankbm ") + RANKBM_VERSION}, {"spec_hash", report.hash},
                  {"spec", to_json(spec)}};
        f << j.dump(2) << '\n';
    }
    return report;
}

}  // namespace rankbm
