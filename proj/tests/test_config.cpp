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
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdstoch/config.hpp"
#include "cdstoch/verify.hpp"

using namespace cdstoch;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

std::string error_of(const std::string& text) {
    try {
        (void)parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig c = parse(
        "seed = 7\n"
        "level = 1  # complex numbers\n"
        "n = 2\n"
        "u0.blocks = 2\n"
        "u0.1.a = 1 0.5\n"
        "u0.1.b = 2\n"
        "u0.2.a = 1 0\n"
        "u0.2.b = 1\n"
        "drift.re = 1 0 0 0\n"
        "window = 0.5 2\n"
        "sde.grids = 8 16\n"
        "experiments = algebra isometry\n");
    CHECK(c.seed == 7);
    CHECK(c.level == 1);
    CHECK(c.u0.size() == 2);
    CHECK(c.a == 0.5);
    CHECK(c.b == 2.0);
    CHECK(c.covariance().dim() == 2);
    CHECK(c.drift()[0].re[0] == 1.0);
    CHECK(c.drift()[1].im[1] == 0.0);
    CHECK(c.experiments == std::vector<std::string>{"algebra", "isometry"});

    // Defaults: identity covariance on n components, zero drift.
    const RunConfig d = parse("seed = 1\nlevel = 3\nn = 3\n");
    CHECK(d.covariance().dim() == 3);
    CHECK(d.drift_re.size() == 24);
}

TEST_CASE("config errors name the offending key") {
    CHECK(error_of("level = 1\n").rfind("seed:", 0) == 0);
    CHECK(error_of("seed = 1\nbogus = 3\n").rfind("bogus:", 0) == 0);
    CHECK(error_of("seed = 1\nseed = 2\n").rfind("seed: duplicate", 0) == 0);
    CHECK(error_of("seed = 1\nreplicas = -4\n").rfind("replicas:", 0) == 0);
    CHECK(error_of("seed = 1\nwindow = 1 0\n").rfind("window:", 0) == 0);
    CHECK(error_of("seed = 1\nsde.grids = 16 24\n").rfind("sde.grids:", 0) == 0);
    CHECK(error_of("seed = 1\nintegral.grid = 6\n").rfind("integral.grid:", 0) == 0);
    CHECK(error_of("seed = 1\nks.level = 1.5\n").rfind("ks.level:", 0) == 0);
    CHECK(error_of("seed = 1\njunk line\n").rfind("line 2:", 0) == 0);
    CHECK(error_of("seed = 1\nlevel = 1\ndrift.re = 1 2 3\n").rfind("drift.re:", 0) == 0);

    const std::string nonsym = error_of(
        "seed = 1\nlevel = 1\nn = 2\nu0.blocks = 1\nu0.1.a = 1 0\nu0.1.b = 1 0.5 0 1\n");
    CHECK(nonsym.rfind("u0:", 0) == 0);
    CHECK(nonsym.find("block 1") != std::string::npos);
    const std::string second = error_of(
        "seed = 1\nlevel = 1\nn = 2\nu0.blocks = 2\nu0.1.a = 1 0\nu0.1.b = 1\nu0.2.a = 1 0\nu0.2.b = -1\n");
    CHECK(second.find("block 2") != std::string::npos);
    CHECK(error_of("seed = 1\nn = 2\nu0.blocks = 1\nu0.1.a = 1 0\nu0.1.b = 1\n").rfind("u0:", 0) == 0);
    CHECK(error_of("seed = 1\nu0.blocks = 1\nu0.1.a = 1 0\n").rfind("u0.1.b:", 0) == 0);
}

TEST_CASE("shipped default configuration parses") {
    const RunConfig c = load_config(std::string(CDSTOCH_SOURCE_DIR) + "/configs/default.cfg");
    CHECK(c.experiments == std::vector<std::string>{"all"});
    CHECK(c.replicas == 100000);
    CHECK(c.sde_replicas == 10000);
    CHECK(c.covariance().u1().has_value());
    CHECK_THROWS_AS(load_config("/nonexistent/cdstoch.cfg"), ConfigError);
}

TEST_CASE("experiment selection") {
    CHECK(expand_selection({"algebra"}) == std::vector<std::string>{"algebra", "sqrt"});
    CHECK(expand_selection({"sde", "algebra"}) == std::vector<std::string>{"algebra", "sqrt", "sde", "restart"});
    CHECK(expand_selection({"paths"}) == std::vector<std::string>{"moments", "charfn", "continuity"});
    CHECK(expand_selection({"all"}) == experiment_names());
    CHECK(expand_selection({"isometry", "isometry"}).size() == 1);
    CHECK_THROWS_AS(expand_selection({"nonsense"}), ConfigError);
    CHECK_THROWS_AS(expand_selection({}), ConfigError);
}

TEST_CASE("report document and determinism across worker counts") {
    RunConfig cfg;
    cfg.replicas = 3000;
    cfg.seed = 99;
    const auto one = run_selection(cfg, {"algebra", "moments"}, 1);
    const auto three = run_selection(cfg, {"algebra", "moments"}, 3);
    REQUIRE(one.size() == 3);
    const nlohmann::json r1 = make_report(cfg, one), r3 = make_report(cfg, three);
    CHECK(r1["schema_version"] == 1);
    CHECK(r1["seed"] == 99);
    CHECK(r1["config"]["replicas"] == 3000);
    CHECK(r1["experiments"].size() == 3);
    CHECK(r1["experiments"][0].contains("wall_time_s"));
    CHECK_FALSE(strip_timing(r1)["experiments"][0].contains("wall_time_s"));
    CHECK(strip_timing(r1).dump() == strip_timing(r3).dump());
    for (const auto& e : r1["experiments"]) {
        CHECK_FALSE(e["anchor"].get<std::string>().empty());
        for (const auto& c : e["checks"]) CHECK(c.contains("passed"));
    }

    const auto dir = std::filesystem::temp_directory_path() / "cdstoch_csv_test";
    std::filesystem::remove_all(dir);
    write_csv_tables(dir.string(), one);
    std::ifstream f(dir / "moments.csv");
    std::string header, row;
    std::getline(f, header);
    std::getline(f, row);
    CHECK(header == "case,check,passed,asserted,key,value");
    CHECK(row.rfind("configured,mean_increment,", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a failing experiment is reported rather than thrown") {
    RunConfig cfg;
    cfg.sde_grids = {16, 32};
    cfg.picard_m_max = 1;
    cfg.sde_replicas = 8;
    const ExperimentResult r = run_experiment("sde", cfg, 1);
    CHECK_FALSE(r.passed());
    CHECK_THROWS_AS(run_experiment("nope", cfg, 1), ConfigError);
}
