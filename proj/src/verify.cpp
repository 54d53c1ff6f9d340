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
#include "cdstoch/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "verify_util.hpp"

#ifndef CDSTOCH_VERSION
#define CDSTOCH_VERSION "0.0.0"
#endif

namespace cdstoch {

const char* library_version() noexcept { return CDSTOCH_VERSION; }

namespace {

using Runner = ExperimentResult (*)(const RunConfig&, int);

const std::vector<std::pair<std::string, Runner>>& registry() {
    static const std::vector<std::pair<std::string, Runner>> r{
        {"algebra", &experiment_algebra},       {"sqrt", &experiment_sqrt},
        {"linops", &experiment_linops},         {"moments", &experiment_moments},
        {"charfn", &experiment_charfn},         {"continuity", &experiment_continuity},
        {"isometry", &experiment_isometry},     {"martingale", &experiment_martingale},
        {"chebyshev", &experiment_chebyshev},   {"sde", &experiment_sde},
        {"restart", &experiment_restart},
    };
    return r;
}

const std::map<std::string, std::vector<std::string>>& groups() {
    static const std::map<std::string, std::vector<std::string>> g{
        {"algebra", {"algebra", "sqrt"}},
        {"paths", {"moments", "charfn", "continuity"}},
        {"sde", {"sde", "restart"}},
    };
    return g;
}

nlohmann::json blocks_json(const std::vector<BlockSpec>& blocks) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : blocks) out.push_back({{"a", b.a}, {"B", b.b}});
    return out;
}

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, fn] : registry()) n.push_back(name);
        return n;
    }();
    return names;
}

std::vector<std::string> expand_selection(const std::vector<std::string>& selection) {
    std::vector<bool> chosen(experiment_names().size(), false);
    auto mark = [&](const std::string& name) {
        const auto& names = experiment_names();
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw ConfigError("experiments: unknown experiment '" + name + "'");
        chosen[static_cast<std::size_t>(it - names.begin())] = true;
    };
    if (selection.empty()) throw ConfigError("experiments: empty selection");
    for (const auto& s : selection) {
        if (s == "all") {
            for (const auto& n : experiment_names()) mark(n);
        } else if (const auto g = groups().find(s); g != groups().end()) {
            for (const auto& n : g->second) mark(n);
        } else {
            mark(s);
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < chosen.size(); ++i)
        if (chosen[i]) out.push_back(experiment_names()[i]);
    return out;
}

ExperimentResult run_experiment(const std::string& name, const RunConfig& cfg, int threads) {
    for (const auto& [n, fn] : registry()) {
        if (n != name) continue;
        vdetail::Stopwatch sw;
        try {
            return fn(cfg, threads);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            // Numerical failures (non-convergence, divergence) are reported, not swallowed.
            ExperimentResult r;
            r.name = name;
            r.anchor = "error";
            r.checks.add("completed", false).note = e.what();
            r.wall_time_s = sw.seconds();
            return r;
        }
    }
    throw ConfigError("experiments: unknown experiment '" + name + "'");
}

std::vector<ExperimentResult> run_selection(const RunConfig& cfg, const std::vector<std::string>& experiments,
                                            int threads, const std::function<void(const ExperimentResult&)>& progress) {
    std::vector<ExperimentResult> out;
    for (const auto& name : expand_selection(experiments)) {
        out.push_back(run_experiment(name, cfg, threads));
        if (progress) progress(out.back());
    }
    return out;
}

nlohmann::json config_echo(const RunConfig& cfg) {
    nlohmann::json j;
    j["level"] = cfg.level;
    j["n"] = cfg.n;
    j["h"] = cfg.h;
    j["u0"] = blocks_json(cfg.u0);
    j["u1"] = blocks_json(cfg.u1);
    j["drift"] = {{"re", cfg.drift_re}, {"im", cfg.drift_im}};
    j["window"] = {cfg.a, cfg.b};
    j["grid"] = cfg.grid;
    j["replicas"] = cfg.replicas;
    j["seed"] = cfg.seed;
    j["experiments"] = cfg.experiments;
    j["integral"] = {{"grid", cfg.integral_grid}};
    j["sde"] = {{"replicas", cfg.sde_replicas}, {"grids", cfg.sde_grids}};
    j["picard"] = {{"m_max", cfg.picard_m_max}, {"tol", cfg.picard_tol}};
    j["ks"] = {{"level", cfg.ks_level}};
    j["continuity"] = {{"eps", cfg.continuity_eps}};
    j["export"] = {{"paths", cfg.export_paths}};
    return j;
}

nlohmann::json make_report(const RunConfig& cfg, const std::vector<ExperimentResult>& results) {
    nlohmann::json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["version"] = library_version();
    doc["seed"] = cfg.seed;
    doc["config"] = config_echo(cfg);
    nlohmann::json exps = nlohmann::json::array();
    bool all = true;
    for (const auto& r : results) {
        nlohmann::json e;
        e["name"] = r.name;
        e["anchor"] = r.anchor;
        e["inputs"] = r.inputs;
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : r.checks.checks) {
            nlohmann::json cj;
            cj["name"] = c.name;
            cj["asserted"] = c.asserted;
            cj["passed"] = c.passed;
            nlohmann::json vals = nlohmann::json::object();
            for (const auto& [k, v] : c.values) vals[k] = number(v);
            cj["values"] = vals;
            if (!c.note.empty()) cj["note"] = c.note;
            checks.push_back(cj);
        }
        e["checks"] = checks;
        e["passed"] = r.passed();
        e["wall_time_s"] = r.wall_time_s;
        all = all && r.passed();
        exps.push_back(e);
    }
    doc["experiments"] = exps;
    doc["passed"] = all;
    return doc;
}

nlohmann::json strip_timing(nlohmann::json report) {
    if (report.is_object()) {
        report.erase("wall_time_s");
        for (auto& [k, v] : report.items()) v = strip_timing(v);
    } else if (report.is_array()) {
        for (auto& v : report) v = strip_timing(v);
    }
    return report;
}

void write_csv_tables(const std::string& dir, const std::vector<ExperimentResult>& results) {
    std::filesystem::create_directories(dir);
    for (const auto& r : results) {
        const auto path = std::filesystem::path(dir) / (r.name + ".csv");
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << "case,check,passed,asserted,key,value\n";
        for (const auto& c : r.checks.checks) {
            const auto slash = c.name.rfind('/');
            const std::string cs = slash == std::string::npos ? "" : c.name.substr(0, slash);
            const std::string name = slash == std::string::npos ? c.name : c.name.substr(slash + 1);
            const std::string head = csv_field(cs) + "," + csv_field(name) + "," + (c.passed ? "1" : "0") + "," +
                                     (c.asserted ? "1" : "0") + ",";
            if (c.values.empty()) out << head << ",\n";
            for (const auto& [k, v] : c.values) out << head << csv_field(k) << "," << csv_number(v) << "\n";
        }
    }
}

}  // namespace cdstoch
