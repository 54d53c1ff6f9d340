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
// Acceptance suite: runs the default battery and prints one PASS/FAIL line per criterion.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cdstoch/config.hpp"
#include "cdstoch/verify.hpp"

using namespace cdstoch;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

const Check* find(const ExperimentResult& r, const std::string& name) {
    for (const auto& c : r.checks.checks)
        if (c.name == name) return &c;
    return nullptr;
}

/// Every check whose name ends in `suffix` must exist and pass; returns how many there are.
int all_pass(Outcome& o, const ExperimentResult& r, const std::string& suffix) {
    int count = 0;
    for (const auto& c : r.checks.checks) {
        if (c.name.size() < suffix.size() || c.name.compare(c.name.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        ++count;
        o.require(c.passed, r.name + ":" + c.name + " failed");
    }
    o.require(count > 0, r.name + ": no check named *" + suffix);
    return count;
}

double value(Outcome& o, const ExperimentResult& r, const std::string& check, const std::string& key) {
    const Check* c = find(r, check);
    if (!c) {
        o.require(false, r.name + ": missing " + check);
        return std::nan("");
    }
    for (const auto& [k, v] : c->values)
        if (k == key) return v;
    o.require(false, r.name + ":" + check + " has no " + key);
    return std::nan("");
}

/// Least-squares slope of log(err) against log(dt); independent of the library's fit.
double fitted_slope(const std::vector<double>& dt, const std::vector<double>& err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(dt.size());
    for (std::size_t i = 0; i < dt.size(); ++i) {
        const double x = std::log(dt[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

int main() {
    const RunConfig cfg = load_config(std::string(CDSTOCH_SOURCE_DIR) + "/configs/default.cfg");
    std::map<std::string, ExperimentResult> res;
    std::vector<ExperimentResult> ordered;
    for (const auto& name : expand_selection({"all"})) {
        ordered.push_back(run_experiment(name, cfg, 1));
        res[name] = ordered.back();
        std::fprintf(stderr, "  ran %-11s %7.2f s\n", name.c_str(), ordered.back().wall_time_s);
    }
    auto seconds = [&](std::initializer_list<const char*> names) {
        double t = 0;
        for (const char* n : names) t += res[n].wall_time_s;
        return t;
    };

    struct Criterion {
        std::string title;
        double limit;  // seconds; <= 0 means none
        std::vector<const char*> experiments;
        std::function<void(Outcome&)> body;
    };
    const std::vector<Criterion> criteria{
        {"algebra identities", 10, {"algebra"}, [&](Outcome& o) {
             const auto& r = res["algebra"];
             for (const char* c : {"quaternion_table", "octonion_table", "norm_multiplicative", "sedenion_zero_divisor",
                                   "no_zero_divisor_pairs_up_to_r3", "alternativity_r3", "moufang_r3"})
                 all_pass(o, r, c);
             o.require(value(o, r, "norm_multiplicative", "pairs") >= 4e4, "fewer than 10^4 pairs per level");
             o.require(value(o, r, "norm_multiplicative", "max_rel_err") <= 1e-12, "norm error above 1e-12");
             o.require(value(o, r, "moufang_r3", "max_rel_err") <= 1e-12, "Moufang error above 1e-12");
         }},
        {"square roots", 5, {"sqrt"}, [&](Outcome& o) {
             const auto& r = res["sqrt"];
             for (const char* c : {"cd_sqrt_roundtrip", "cdc_sqrt_roundtrip", "sqrt_of_4_is_2", "nilpotent_rejected"})
                 all_pass(o, r, c);
             o.require(value(o, r, "sqrt_of_4_is_2", "cd_sqrt") == 2.0, "sqrt(4) != 2");
             o.require(value(o, r, "cd_sqrt_roundtrip", "inputs") >= 1e4, "fewer than 10^4 inputs");
         }},
        {"operator layer", 30, {"linops"}, [&](Outcome& o) {
             const auto& r = res["linops"];
             for (const char* c : {"structured_vs_realized", "trace_formulas_agree", "op_norm_le_hs_norm", "cov_sqrt_squared"})
                 all_pass(o, r, c);
             o.require(value(o, r, "op_norm_le_hs_norm", "operators") >= 1e4, "fewer than 10^4 operators");
         }},
        {"increment moments", 60, {"moments"}, [&](Outcome& o) {
             const auto& r = res["moments"];
             o.require(r.passed(), "moments failed");
             all_pass(o, r, "mean_increment");
             o.require(all_pass(o, r, "second_moment_12") >= 2, "cross-component cases missing");
             all_pass(o, r, "cross_block/second_moment_13");
             all_pass(o, r, "direction_i1/second_moment_11");
             o.require(cfg.replicas >= 100000, "N below 10^5");
         }},
        {"characteristic functional", 60, {"charfn"}, [&](Outcome& o) {
             const auto& r = res["charfn"];
             o.require(all_pass(o, r, "/oracle") == 20, "battery is not 20 cases");
             all_pass(o, r, "/semigroup");
         }},
        {"isometry and norm bound", 120, {"isometry"}, [&](Outcome& o) {
             const auto& r = res["isometry"];
             o.require(r.passed(), "isometry experiment failed");
             o.require(all_pass(o, r, "/isometry") == 10, "isometry battery is not 10 cases");
             all_pass(o, r, "/m1_le_m3");
             all_pass(o, r, "/m1_equals_m2");
             const double rhs = value(o, r, "case0/identity_r0/isometry", "rhs");
             const double lhs = value(o, r, "case0/identity_r0/isometry", "lhs");
             const double se = value(o, r, "case0/identity_r0/isometry", "lhs_se");
             o.require(std::abs(rhs - (cfg.b - cfg.a)) <= 1e-12, "S = I, U = I: rhs != t - a");
             o.require(std::abs(lhs - (cfg.b - cfg.a)) <= 4 * se, "S = I, U = I: lhs not within 4 se of t - a");
         }},
        {"martingale and maximal inequalities", 120, {"martingale", "chebyshev"}, [&](Outcome& o) {
             const auto& m = res["martingale"];
             all_pass(o, m, "/unconditional_mean");
             all_pass(o, m, "/binned_conditional_mean");
             all_pass(o, m, "lookahead_control_rejected");
             const auto& c = res["chebyshev"];
             o.require(c.passed(), "chebyshev experiment failed");
             o.require(all_pass(o, c, "/sup_norm_tail") == 12, "Chebyshev battery incomplete");
             all_pass(o, c, "/euclid_tail_scaled");
         }},
        {"SDE existence, uniqueness, strong order", 300, {"sde"}, [&](Outcome& o) {
             const auto& r = res["sde"];
             o.require(r.passed(), "sde experiment failed");
             all_pass(o, r, "/converged");
             all_pass(o, r, "/factorial_decay");
             all_pass(o, r, "picard_vs_euler_shrinks");
             all_pass(o, r, "strong_order");
             o.require(cfg.sde_replicas >= 10000, "N below 10^4");
             std::vector<double> dt, err;
             for (std::size_t g : cfg.sde_grids) {
                 const std::string k = "K" + std::to_string(g);
                 dt.push_back(value(o, r, "linear/error_table", "dt_" + k));
                 err.push_back(value(o, r, "linear/error_table", "err_" + k));
             }
             o.require(dt.size() >= 5, "fewer than 4 halvings");
             const double s = fitted_slope(dt, err);
             o.require(s >= 0.35 && s <= 0.65, "independent slope fit " + std::to_string(s) + " outside [0.35, 0.65]");
         }},
        {"Markov restart", 60, {"restart"}, [&](Outcome& o) {
             const auto& r = res["restart"];
             o.require(all_pass(o, r, "/pathwise_restart") == 5, "restart battery incomplete");
             all_pass(o, r, "/transition_law_ks");
             for (const auto& c : r.checks.checks)
                 if (c.name.find("pathwise_restart") != std::string::npos)
                     for (const auto& [k, v] : c.values)
                         if (k == "max_abs_deviation") o.require(v <= 1e-12, c.name + " deviation above 1e-12");
         }},
        {"determinism across worker counts", 0, {}, [&](Outcome& o) {
             const auto again = run_selection(cfg, {"all"}, 3);
             const std::string a = strip_timing(make_report(cfg, ordered)).dump();
             const std::string b = strip_timing(make_report(cfg, again)).dump();
             o.require(a == b, "reports differ between 1 and 3 workers");
             o.detail = o.detail.empty() ? "report bytes " + std::to_string(a.size()) : o.detail;
         }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const Criterion& c = criteria[i];
        Outcome o;
        c.body(o);
        double t = 0;
        for (const char* n : c.experiments) t += seconds({n});
        if (c.limit > 0) o.require(t < c.limit, "runtime " + std::to_string(t) + " s over limit");
        char timing[64] = "";
        if (c.limit > 0) std::snprintf(timing, sizeof timing, " (%.1f s, limit %.0f s)", t, c.limit);
        std::printf("criterion %2zu %s: %s%s%s%s\n", i + 1, o.ok ? "PASS" : "FAIL", c.title.c_str(), timing,
                    o.detail.empty() ? "" : ": ", o.detail.c_str());
        std::fflush(stdout);
        if (!o.ok) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
