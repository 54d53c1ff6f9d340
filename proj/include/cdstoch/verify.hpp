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
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdstoch/check.hpp"
#include "cdstoch/config.hpp"

namespace cdstoch {

inline constexpr int kReportSchemaVersion = 1;
const char* library_version() noexcept;

struct ExperimentResult {
    std::string name;
    std::string anchor;  ///< the mathematical statement the experiment probes
    nlohmann::json inputs = nlohmann::json::object();
    CheckGroup checks;
    double wall_time_s = 0.0;

    [[nodiscard]] bool passed() const { return checks.passed(); }
};

/// Experiment names in dependency order.
const std::vector<std::string>& experiment_names();

/// Expands subcommand-level names (algebra, paths, sde, all, ...) into experiment names, in
/// dependency order and without duplicates. Throws ConfigError on unknown names.
std::vector<std::string> expand_selection(const std::vector<std::string>& selection);

ExperimentResult run_experiment(const std::string& name, const RunConfig& cfg, int threads = 0);

/// Runs the selected experiments. progress, when set, is called after each experiment.
std::vector<ExperimentResult> run_selection(const RunConfig& cfg, const std::vector<std::string>& experiments,
                                            int threads = 0,
                                            const std::function<void(const ExperimentResult&)>& progress = {});

/// JSON report document (schema_version 1).
nlohmann::json make_report(const RunConfig& cfg, const std::vector<ExperimentResult>& results);
/// Copy of a report with every wall_time_s field removed.
nlohmann::json strip_timing(nlohmann::json report);
nlohmann::json config_echo(const RunConfig& cfg);

/// One CSV table per experiment: case,check,passed,asserted,key,value.
void write_csv_tables(const std::string& dir, const std::vector<ExperimentResult>& results);

// Individual batteries (also reachable through run_experiment).
ExperimentResult experiment_algebra(const RunConfig& cfg, int threads);
ExperimentResult experiment_sqrt(const RunConfig& cfg, int threads);
ExperimentResult experiment_linops(const RunConfig& cfg, int threads);
ExperimentResult experiment_moments(const RunConfig& cfg, int threads);
ExperimentResult experiment_charfn(const RunConfig& cfg, int threads);
ExperimentResult experiment_continuity(const RunConfig& cfg, int threads);
ExperimentResult experiment_isometry(const RunConfig& cfg, int threads);
ExperimentResult experiment_martingale(const RunConfig& cfg, int threads);
ExperimentResult experiment_chebyshev(const RunConfig& cfg, int threads);
ExperimentResult experiment_sde(const RunConfig& cfg, int threads);
ExperimentResult experiment_restart(const RunConfig& cfg, int threads);

}  // namespace cdstoch
