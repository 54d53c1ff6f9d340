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
#include "cdstoch/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cdstoch {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

std::vector<std::string> split(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

double to_double(const std::string& key, const std::string& tok) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) fail(key, "not a number: '" + tok + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& tok) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail(key, "not an unsigned integer: '" + tok + "'");
    return v;
}

std::vector<double> doubles(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& t : split(value)) out.push_back(to_double(key, t));
    return out;
}

std::string single(const std::string& key, const std::string& value) {
    const auto toks = split(value);
    if (toks.size() != 1) fail(key, "expected a single value");
    return toks.front();
}

std::size_t positive(const std::string& key, const std::string& value) {
    const std::uint64_t v = to_u64(key, single(key, value));
    if (v == 0) fail(key, "must be positive");
    return static_cast<std::size_t>(v);
}

std::vector<CovarianceOperator::Block> blocks(const std::string& key, const std::vector<BlockSpec>& specs,
                                              AlgebraLevel level) {
    std::vector<CovarianceOperator::Block> out;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        const std::string k = key + "." + std::to_string(j + 1);
        const BlockSpec& s = specs[j];
        if (s.a.size() != level.dim()) fail(k + ".a", "expected " + std::to_string(level.dim()) + " coefficients");
        const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(s.b.size()))));
        if (d == 0 || d * d != s.b.size()) fail(k + ".b", "expected a square row-major matrix");
        Eigen::MatrixXd bm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) bm(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s.b[r * d + c];
        out.push_back({CdReal(level, std::span<const double>(s.a)), bm});
    }
    return out;
}

CovarianceOperator make_cov(const std::string& key, const std::vector<BlockSpec>& specs, AlgebraLevel level) {
    try {
        return CovarianceOperator(blocks(key, specs, level));
    } catch (const CdError& e) {
        fail(key, e.what());
    }
}

}  // namespace

ComplexCovariance RunConfig::covariance() const {
    const AlgebraLevel L = algebra_level();
    if (u0.empty()) fail("u0.blocks", "at least one block required");
    CovarianceOperator c0 = make_cov("u0", u0, L);
    if (c0.dim() != n) fail("u0", "block sizes sum to " + std::to_string(c0.dim()) + ", expected n = " + std::to_string(n));
    if (u1.empty()) return ComplexCovariance(std::move(c0));
    CovarianceOperator c1 = make_cov("u1", u1, L);
    if (c1.dim() != n) fail("u1", "block sizes sum to " + std::to_string(c1.dim()) + ", expected n = " + std::to_string(n));
    try {
        return ComplexCovariance(std::move(c0), std::move(c1));
    } catch (const CdError& e) {
        fail("u1", e.what());
    }
}

CdVector RunConfig::drift() const {
    const AlgebraLevel L = algebra_level();
    const std::size_t want = L.dim() * n;
    if (drift_re.size() != want) fail("drift.re", "expected " + std::to_string(want) + " numbers");
    if (drift_im.size() != want) fail("drift.im", "expected " + std::to_string(want) + " numbers");
    CdVector p(L, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < L.dim(); ++l) {
            p[j].re[l] = drift_re[j * L.dim() + l];
            p[j].im[l] = drift_im[j * L.dim() + l];
        }
    }
    return p;
}

void RunConfig::validate() const {
    if (level < 0 || level > kMaxLevel) fail("level", "must be in 0.." + std::to_string(kMaxLevel));
    if (!(a < b)) fail("window", "need a < b");
    if (grid < 2) fail("grid", "need at least 2 steps");
    if (replicas < 2) fail("replicas", "need at least 2");
    if (sde_replicas < 4) fail("sde.replicas", "need at least 4");
    if (sde_grids.size() < 2) fail("sde.grids", "need at least two grid sizes");
    const std::size_t top = *std::max_element(sde_grids.begin(), sde_grids.end());
    for (std::size_t g : sde_grids) {
        if (g < 2 || top % g != 0) fail("sde.grids", "each grid size must divide the largest");
    }
    if (integral_grid < 4 || integral_grid % 4 != 0) fail("integral.grid", "must be a positive multiple of 4");
    if (!(picard_tol > 0.0)) fail("picard.tol", "must be positive");
    if (!(ks_level > 0.0 && ks_level < 1.0)) fail("ks.level", "must lie in (0, 1)");
    if (!(continuity_eps > 0.0)) fail("continuity.eps", "must be positive");
    (void)covariance();
    (void)drift();
}

RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (split(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const auto keys = split(line.substr(0, eq));
        if (keys.size() != 1) throw ConfigError("line " + std::to_string(lineno) + ": malformed key");
        if (!kv.emplace(keys.front(), line.substr(eq + 1)).second) fail(keys.front(), "duplicate key");
    }

    std::set<std::string> used;
    auto take = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        used.insert(key);
        return &it->second;
    };

    if (auto v = take("level")) c.level = static_cast<int>(to_u64("level", single("level", *v)));
    if (auto v = take("n")) c.n = positive("n", *v);
    if (auto v = take("h")) c.h = positive("h", *v);
    const std::size_t dim = std::size_t{1} << std::min(c.level, kMaxLevel);

    auto read_blocks = [&](const std::string& key) {
        std::vector<BlockSpec> out;
        const std::string* count = take(key + ".blocks");
        if (!count) return out;
        const std::size_t m = static_cast<std::size_t>(to_u64(key + ".blocks", single(key + ".blocks", *count)));
        for (std::size_t j = 1; j <= m; ++j) {
            const std::string k = key + "." + std::to_string(j);
            const std::string* av = take(k + ".a");
            const std::string* bv = take(k + ".b");
            if (!av) fail(k + ".a", "missing");
            if (!bv) fail(k + ".b", "missing");
            out.push_back({doubles(k + ".a", *av), doubles(k + ".b", *bv)});
        }
        return out;
    };
    if (kv.count("u0.blocks")) {
        c.u0 = read_blocks("u0");
    } else {
        c.u0 = {{std::vector<double>(dim, 0.0), {}}};
        c.u0[0].a[0] = 1.0;
        c.u0[0].b.assign(c.n * c.n, 0.0);
        for (std::size_t i = 0; i < c.n; ++i) c.u0[0].b[i * c.n + i] = 1.0;
    }
    c.u1 = read_blocks("u1");
    c.drift_re.assign(dim * c.n, 0.0);
    c.drift_im.assign(dim * c.n, 0.0);
    if (auto v = take("drift.re")) c.drift_re = doubles("drift.re", *v);
    if (auto v = take("drift.im")) c.drift_im = doubles("drift.im", *v);
    if (auto v = take("window")) {
        const auto w = doubles("window", *v);
        if (w.size() != 2) fail("window", "expected two numbers a b");
        c.a = w[0];
        c.b = w[1];
    }
    if (auto v = take("grid")) c.grid = positive("grid", *v);
    if (auto v = take("replicas")) c.replicas = positive("replicas", *v);
    if (auto v = take("seed")) {
        c.seed = to_u64("seed", single("seed", *v));
    } else {
        fail("seed", "required in configuration files");
    }
    if (auto v = take("experiments")) {
        c.experiments = split(*v);
        if (c.experiments.empty()) fail("experiments", "empty selection");
    }
    if (auto v = take("integral.grid")) c.integral_grid = positive("integral.grid", *v);
    if (auto v = take("sde.replicas")) c.sde_replicas = positive("sde.replicas", *v);
    if (auto v = take("sde.grids")) {
        c.sde_grids.clear();
        for (const auto& t : split(*v)) c.sde_grids.push_back(static_cast<std::size_t>(to_u64("sde.grids", t)));
    }
    if (auto v = take("picard.m_max")) c.picard_m_max = positive("picard.m_max", *v);
    if (auto v = take("picard.tol")) c.picard_tol = to_double("picard.tol", single("picard.tol", *v));
    if (auto v = take("ks.level")) c.ks_level = to_double("ks.level", single("ks.level", *v));
    if (auto v = take("continuity.eps")) c.continuity_eps = to_double("continuity.eps", single("continuity.eps", *v));
    if (auto v = take("export.paths")) c.export_paths = static_cast<std::size_t>(to_u64("export.paths", single("export.paths", *v)));

    for (const auto& [k, v] : kv) {
        if (!used.count(k)) fail(k, "unknown key");
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(in);
}

}  // namespace cdstoch
