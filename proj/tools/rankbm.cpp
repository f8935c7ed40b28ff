// SPDX-License-Identifier: Apache-2.0
//
// rankbm run | skorokhod-verify | bounds | presets
//
// exit codes: 0 ok, 1 a check failed, 2 bad usage or spec, 3 runtime error
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "rankbm/bounds.hpp"
#include "rankbm/core.hpp"
#include "rankbm/experiment.hpp"
#include "rankbm/oracle.hpp"
#include "rankbm/skorokhod.hpp"

namespace {

using namespace rankbm;

struct RunArgs {
    std::string config, preset, out, format;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<unsigned> threads;
    bool quiet = false;
};

int do_run(const RunArgs& a) {
    if (a.config.empty() == a.preset.empty()) {
        std::cerr << "rankbm: give exactly one of --config or --preset\n";
        return 2;
    }
    ExperimentSpec spec = a.preset.empty() ? load_spec_file(a.config) : preset(a.preset);
    if (a.seed) spec.seed = *a.seed;
    if (a.replicates) spec.replicates = *a.replicates;
    if (a.threads) spec.threads = *a.threads;
    if (!a.out.empty()) spec.out = a.out;
    if (!a.format.empty()) spec.format = a.format;
    validate(spec);
    const RunReport r = run_experiment(spec);
    if (!a.quiet) {
        std::cout << provenance_line(spec) << '\n';
        for (const auto& c : r.checks) {
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        }
        for (const auto& f : r.files) std::cout << "wrote " << f << '\n';
    }
    return r.passed() ? 0 : 1;
}

struct VerifyArgs {
    std::string input, out = ".";
    int K = 0;
    double tol = 0.0;
    bool oracle = false;
};

int do_verify(const VerifyArgs& a) {
    const GridPath x = read_csv_file(a.input);
    const int K = static_cast<int>(x.dim()) + 1;
    if (a.K != 0 && a.K != K) {
        std::cerr << "rankbm: --K " << a.K << " does not match a path of dimension " << x.dim() << '\n';
        return 2;
    }
    const ReflectionSpec spec = build_rescaling(K);
    const double tol = a.tol > 0.0 ? a.tol : default_tolerance(x);
    const SkorokhodSolution sol = solve_local_time(x, spec, tol);
    const InvariantReport inv = check_invariants(x, spec, sol, tol);
    const LipschitzBudget b = lipschitz_budget(K);

    std::filesystem::create_directories(a.out);
    const std::string tag = "rankbm " RANKBM_VERSION " skorokhod-verify";
    write_csv_file((std::filesystem::path(a.out) / "y.csv").string(), sol.y, {tag});
    write_csv_file((std::filesystem::path(a.out) / "z.csv").string(), sol.z, {tag});

    nlohmann::ordered_json j;
    j["K"] = K;
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    j["tolerance"] = tol;
    j["budgets"] = {{"tmax_L", b.tmax_L}, {"t2_L", b.t2_L}, {"tmax_R", b.tmax_R}, {"tmax_L_exact", b.tmax_L_exact}};
    j["invariants"] = {{"nonnegative", inv.nonnegative}, {"monotone", inv.monotone},
                       {"assembled", inv.assembled},     {"complementary", inv.complementary},
                       {"contracting", inv.contracting}, {"converged", inv.converged}};
    bool ok = inv.ok();
    if (a.oracle) {
        const auto ref = oracle::solve_per_step(x, spec.q);
        const double dy = norm_tmax(sol.y - ref.y), dz = norm_tmax(sol.z - ref.z);
        const bool agree = dy <= 1e-10 && dz <= 1e-10;
        j["oracle"] = {{"max_diff_y", dy}, {"max_diff_z", dz}, {"sweeps", ref.max_sweeps}, {"agree", agree}};
        ok = ok && agree;
    }
    j["passed"] = ok;
    std::ofstream f(std::filesystem::path(a.out) / "verify.json");
    f << j.dump(2) << '\n';
    std::cout << j.dump() << '\n';
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rank-based Brownian particle systems"};
    app.set_version_flag("--version", std::string("rankbm ") + RANKBM_VERSION);
    app.require_subcommand(0, 1);

    RunArgs run;
    auto add_run_flags = [&run](CLI::App* c) {
        c->add_option("--config", run.config, "experiment spec (JSON)");
        c->add_option("--preset", run.preset, "builtin experiment");
        c->add_option("--seed", run.seed);
        c->add_option("--replicates", run.replicates);
        c->add_option("--threads", run.threads, "0 = all cores");
        c->add_option("--out", run.out, "output directory");
        c->add_option("--format", run.format)->check(CLI::IsMember({"csv", "jsonl"}));
        c->add_flag("-q,--quiet", run.quiet);
    };
    add_run_flags(&app);
    auto* run_cmd = app.add_subcommand("run", "run an experiment");
    add_run_flags(run_cmd);

    VerifyArgs verify;
    auto* ver = app.add_subcommand("skorokhod-verify", "solve one path and check the solution");
    ver->add_option("input", verify.input, "path CSV")->required()->check(CLI::ExistingFile);
    ver->add_option("--K", verify.K, "particle count (path dimension + 1)");
    ver->add_option("--tol", verify.tol, "iteration tolerance (default 1e-12 (1 + |x|))");
    ver->add_flag("--oracle", verify.oracle, "compare with the per-step solver");
    ver->add_option("--out", verify.out, "output directory");

    BoundQuery bq;
    auto* bcmd = app.add_subcommand("bounds", "print the bound table as CSV");
    bcmd->add_option("--K", bq.K);
    bcmd->add_option("--J", bq.J);
    bcmd->add_option("--delta", bq.delta);
    bcmd->add_option("--c", bq.c);
    bcmd->add_option("--Delta", bq.Delta);
    bcmd->add_option("--N", bq.N);
    bcmd->add_option("--T", bq.T);
    bcmd->add_option("--n", bq.n);
    bcmd->add_option("--m", bq.m)->delimiter(',');
    bcmd->add_option("--r", bq.radii)->delimiter(',');
    bcmd->add_option("--m1", bq.m1, "compute C1 for this m1");
    bcmd->add_option("--m2", bq.m2, "compute C2 for this m2");

    auto* pcmd = app.add_subcommand("presets", "list builtin experiments");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ver) return do_verify(verify);
        if (*bcmd) {
            std::cout << bound_table_csv(bound_rows(bq));
            return 0;
        }
        if (*pcmd) {
            for (const auto& n : preset_names()) std::cout << n << '\n';
            return 0;
        }
        return do_run(run);
    } catch (const std::invalid_argument& e) {
        std::cerr << "rankbm: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rankbm: " << e.what() << '\n';
        return 3;
    }
}
