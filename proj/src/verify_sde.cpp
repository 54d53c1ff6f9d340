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
#include <algorithm>
#include <cmath>

#include "cdstoch/sde.hpp"
#include "verify_util.hpp"

namespace cdstoch {

namespace {

InitialSampler zeta_at(AlgebraLevel L, std::size_t n, double re0, double scale) {
    CdVector m(L, n);
    for (std::size_t j = 0; j < n; ++j) m[j].re[0] = re0;
    return {m, scale};
}

struct Problem {
    std::string label;
    SdeProblem pr;
};

SdeProblem linear_problem(const TimeGrid& grid, double h_scale = 0.5) {
    const AlgebraLevel L(1);
    const RealizedOp g = RightLinearOp::left_mult(L, 1, CdReal(L, {-1.0, 0.5})).realized();
    RealizedOp h = RealizedOp::identity(L, 1);
    h.m *= h_scale;
    return SdeProblem::linear(g, h, zeta_at(L, 1, 1.0, 0.3), grid, ComplexCovariance(CovarianceOperator::identity(L, 1)),
                              CdVector(L, 1));
}

SdeProblem nonlinear_problem(const TimeGrid& grid) {
    const AlgebraLevel L(1);
    const Eigen::MatrixXd id = RealizedOp::identity(L, 1).m;
    return SdeProblem{L,
                      1,
                      [](double, const Eigen::VectorXd& y, Eigen::VectorXd& out) { out = -y.array().sin(); },
                      [id](double, const Eigen::VectorXd& y, Eigen::MatrixXd& out) { out = 0.3 * std::cos(y[0]) * id; },
                      zeta_at(L, 1, 0.5, 0.2),
                      1.3,
                      grid,
                      ComplexCovariance(CovarianceOperator::identity(L, 1)),
                      CdVector(L, 1),
                      std::nullopt,
                      std::nullopt};
}

/// Linear problem on the configured driver with h state components: G = -I + 0.5 i_1 (i_0 when
/// r = 0), H = 0.5 times the h x n coordinate embedding.
SdeProblem configured_problem(const RunConfig& cfg, const TimeGrid& grid) {
    const AlgebraLevel L = cfg.algebra_level();
    CdReal a = CdReal::scalar(L, -1.0);
    if (L.r() >= 1) a[1] = 0.5;
    const RealizedOp g = RightLinearOp::left_mult(L, cfg.h, a).realized();
    CdMatrix e(L, cfg.h, cfg.n);
    for (std::size_t j = 0; j < std::min(cfg.h, cfg.n); ++j) e(j, j) = CdReal::scalar(L, 0.5);
    const RealizedOp h = RightLinearOp::from_parts(e, CdMatrix(L, cfg.h, cfg.n)).realized();
    return SdeProblem::linear(g, h, zeta_at(L, cfg.h, 1.0, 0.3), grid, cfg.covariance(), cfg.drift());
}

std::size_t finest_grid(const RunConfig& cfg) { return *std::max_element(cfg.sde_grids.begin(), cfg.sde_grids.end()); }

TimeGrid window(const RunConfig& cfg, std::size_t K) { return TimeGrid::uniform(cfg.a, cfg.b, K); }

}  // namespace

ExperimentResult experiment_sde(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "sde";
    res.anchor = "existence and uniqueness by Picard iteration in B_{2,inf}; linear closed form exp_l(Gt) zeta + int exp_l(G(t - s)) H dw";
    const std::size_t K = finest_grid(cfg), N = cfg.sde_replicas;
    const std::size_t K_fine = 8 * K;
    std::vector<std::size_t> strides;
    for (std::size_t g : cfg.sde_grids) strides.push_back(K_fine / g);
    std::sort(strides.rbegin(), strides.rend());
    std::vector<std::size_t> u_strides;
    for (std::size_t g : cfg.sde_grids)
        if (g < K) u_strides.push_back(K / g);
    std::sort(u_strides.rbegin(), u_strides.rend());
    res.inputs = {{"replicas", N},         {"grid", K},           {"fine_grid", K_fine}, {"strong_order_strides", strides},
                  {"uniqueness_strides", u_strides}, {"m_max", cfg.picard_m_max}, {"tol", cfg.picard_tol}};
    CheckGroup& g = res.checks;

    const std::vector<Problem> problems{{"linear", linear_problem(window(cfg, K))},
                                        {"nonlinear", nonlinear_problem(window(cfg, K))},
                                        {"configured", configured_problem(cfg, window(cfg, K))}};
    std::uint64_t tag = 300;
    for (const Problem& p : problems) {
        CheckGroup pg;
        pg.append(lipschitz_validate(p.pr, 2000, vdetail::sub_seed(cfg.seed, tag++)));
        pg.append(picard_checks(p.pr, p.pr.noise(vdetail::sub_seed(cfg.seed, tag++), N), cfg.picard_m_max,
                                cfg.picard_tol, threads));
        g.append(pg, p.label + "/");
    }

    const SdeProblem fine = linear_problem(window(cfg, K_fine));
    g.append(strong_order_study(fine, fine.noise(vdetail::sub_seed(cfg.seed, tag++), N), strides, threads),
             "linear/");
    if (u_strides.size() >= 2) {
        const SdeProblem nl = nonlinear_problem(window(cfg, K));
        g.append(uniqueness_study(nl, nl.noise(vdetail::sub_seed(cfg.seed, tag++), N), u_strides, cfg.picard_m_max,
                                  cfg.picard_tol, threads),
                 "nonlinear/");
    }
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_restart(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "restart";
    res.anchor = "Markov property: restarting at t from Y(t) reproduces Y, and the transition law matches";
    const std::size_t K = 64, N = cfg.sde_replicas;
    res.inputs = {{"replicas", N}, {"grid", K}, {"ks_level", cfg.ks_level}};
    CheckGroup& g = res.checks;
    const TimeGrid grid = window(cfg, K);
    const std::vector<std::pair<Problem, std::size_t>> battery{
        {{"linear", linear_problem(grid)}, K / 2},
        {{"nonlinear", nonlinear_problem(grid)}, K / 2},
        {{"deterministic", linear_problem(grid, 0.0)}, K / 4},
        {{"restart_at_start", linear_problem(grid)}, 0},
        {{"configured", configured_problem(cfg, grid)}, 3 * K / 4},
    };
    nlohmann::json mids = nlohmann::json::object();
    std::uint64_t tag = 400;
    for (const auto& [p, l_mid] : battery) {
        g.append(restart_markov_check(p.pr, p.pr.noise(vdetail::sub_seed(cfg.seed, tag++), N), l_mid, threads,
                                      cfg.ks_level),
                 p.label + "/");
        mids[p.label] = l_mid;
    }
    res.inputs["l_mid"] = mids;
    res.wall_time_s = sw.seconds();
    return res;
}

}  // namespace cdstoch
