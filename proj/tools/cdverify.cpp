/*
 * Copyright 2026 The cdstoch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// cdverify: runs the verification batteries and writes reports.
//
// Exit codes: 0 all asserted checks passed, 1 some check failed, 2 configuration or usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdstoch/config.hpp"
#include "cdstoch/mc.hpp"
#include "cdstoch/paths.hpp"
#include "cdstoch/verify.hpp"

namespace {

struct Options {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::vector<std::size_t> grids;
    std::string out = ".";
    std::string format = "json";
    std::optional<int> threads;
    std::string config;
    bool quiet = false;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--seed", o.seed, "64-bit seed");
    sub->add_option("--replicas", o.replicas, "Monte Carlo replicas")->check(CLI::PositiveNumber);
    sub->add_option("--grid", o.grids, "time steps (repeat for the sde grid list)")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", o.threads, "worker threads (default: CD_STOCHASTIC_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--config", o.config, "configuration file");
    sub->add_flag("-q,--quiet", o.quiet, "no per-experiment summary");
}

/// Applies command-line overrides for subcommand `cmd` on top of the loaded configuration.
void apply(const std::string& cmd, const Options& o, cdstoch::RunConfig& cfg) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.replicas) {
        if (cmd == "sde")
            cfg.sde_replicas = *o.replicas;
        else
            cfg.replicas = *o.replicas;
    }
    if (!o.grids.empty()) {
        if (cmd == "sde") {
            cfg.sde_grids = o.grids;
        } else if (o.grids.size() > 1) {
            throw cdstoch::ConfigError("--grid: repeat only with the sde subcommand");
        } else if (cmd == "isometry" || cmd == "martingale" || cmd == "chebyshev") {
            cfg.integral_grid = o.grids.front();
        } else {
            cfg.grid = o.grids.front();
        }
    }
    if (cmd != "run") cfg.experiments = {cmd};
}

int run(const std::string& cmd, const Options& o) {
    cdstoch::RunConfig cfg;
    if (!o.config.empty()) cfg = cdstoch::load_config(o.config);
    apply(cmd, o, cfg);
    cfg.validate();
    const auto selection = cdstoch::expand_selection(cfg.experiments);

    const int threads = cdstoch::resolve_threads(o.threads);
    cdstoch::set_default_threads(threads);

    const auto results = cdstoch::run_selection(cfg, selection, threads, [&](const cdstoch::ExperimentResult& r) {
        if (o.quiet) return;
        std::printf("%-4s %-12s %8.2f s\n", r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.wall_time_s);
        for (const auto& c : r.checks.checks)
            if (c.asserted && !c.passed) std::printf("       failed: %s\n", c.name.c_str());
        std::fflush(stdout);
    });

    std::filesystem::create_directories(o.out);
    const nlohmann::json report = cdstoch::make_report(cfg, results);
    if (o.format == "csv") {
        cdstoch::write_csv_tables(o.out, results);
    } else {
        std::ofstream f(std::filesystem::path(o.out) / "report.json");
        f << report.dump(2) << "\n";
        if (!f) throw std::runtime_error("cannot write report.json");
    }
    if (cfg.export_paths > 0) {
        const cdstoch::PathEnsemble ens(cfg.time_grid(), cfg.covariance(), cfg.drift(), cfg.seed, cfg.export_paths);
        std::ofstream f(std::filesystem::path(o.out) / "paths.csv");
        cdstoch::write_paths_csv(f, ens, cfg.export_paths);
    }
    return report["passed"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verification batteries for stochastic calculus over Cayley-Dickson algebras"};
    app.set_version_flag("--version", cdstoch::library_version());
    app.require_subcommand(1, 1);
    Options opts;
    const std::vector<std::pair<std::string, std::string>> subs{
        {"algebra", "multiplication tables, identities, square roots"},
        {"linops", "right-linear operators, traces, norms, covariance roots"},
        {"paths", "increment moments, characteristic functional, continuity"},
        {"isometry", "isometry and norm bound battery"},
        {"martingale", "martingale property and the look-ahead control"},
        {"chebyshev", "maximal inequalities"},
        {"sde", "Picard iteration, convergence study, restart property"},
        {"all", "every experiment"},
        {"run", "experiments selected by --config"},
    };
    for (const auto& [name, help] : subs) add_common(app.add_subcommand(name, help), opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "run" && opts.config.empty()) throw cdstoch::ConfigError("--config: required by run");
        return run(cmd, opts);
    } catch (const cdstoch::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
