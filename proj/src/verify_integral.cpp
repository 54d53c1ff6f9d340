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
#include <cmath>

#include "cdstoch/integral.hpp"
#include "verify_util.hpp"

namespace cdstoch {

using vdetail::Inputs;

namespace {

/// S00 = S11 = a, S01 = S10 = 0: an A_r-entried operator.
RightLinearOp ar_op(const CdMatrix& a) { return RightLinearOp::from_parts(a, CdMatrix(a.level(), a.rows(), a.cols())); }

struct IntegralCase {
    std::string label;
    Integrand s;
    PathEnsemble ens;
    /// rhs of the isometry when it is known in closed form (NaN otherwise).
    double exact_rhs = std::nan("");
    bool isometry = true;
};

/// Battery shared by the isometry, martingale and Chebyshev experiments: ten A_r-valued cases
/// plus two with an i-part in the driver and the integrand (norm bound only).
std::vector<IntegralCase> integral_battery(const RunConfig& cfg, std::size_t replicas) {
    Inputs in(cfg.seed, 601);
    const TimeGrid grid = TimeGrid::uniform(cfg.a, cfg.b, cfg.integral_grid);
    std::vector<IntegralCase> out;
    std::uint64_t tag = 200;
    auto ensemble = [&](ComplexCovariance u) {
        const std::size_t n = u.dim();
        const AlgebraLevel L = u.level();
        return PathEnsemble(grid, std::move(u), CdVector(L, n), vdetail::sub_seed(cfg.seed, tag++), replicas);
    };
    auto real_cov = [&](AlgebraLevel L, std::size_t n) {
        return ComplexCovariance(CovarianceOperator({{in.cov_scalar(L), in.spd(n)}}));
    };

    {
        const AlgebraLevel L(0);
        out.push_back({"identity_r0", Integrand::constant(RealizedOp::identity(L, 1)),
                       ensemble(ComplexCovariance(CovarianceOperator::identity(L, 1))), cfg.b - cfg.a});
    }
    {
        const AlgebraLevel L(2);
        out.push_back({"identity_r2_n2", Integrand::constant(RealizedOp::identity(L, 2)),
                       ensemble(ComplexCovariance(CovarianceOperator::identity(L, 2))), 2.0 * (cfg.b - cfg.a)});
    }
    {
        const AlgebraLevel L(1);
        out.push_back({"constant_r1", Integrand::constant(ar_op(in.matrix(L, 2, 2))), ensemble(real_cov(L, 2))});
    }
    {
        const AlgebraLevel L(3);
        out.push_back({"constant_octonion", Integrand::constant(ar_op(in.matrix(L, 1, 2))), ensemble(real_cov(L, 2))});
    }
    {
        const AlgebraLevel L(1);
        const Integrand s = Integrand::predictable(L, 1, 1, [L](const PathPrefix& p, Eigen::MatrixXd& out) {
            out = std::cos(std::sqrt(vec_norm2(p.current()))) * RealizedOp::identity(L, 1).m;
        }, 1.0);
        out.push_back({"damped_by_path", s, ensemble(real_cov(L, 1))});
    }
    {
        const AlgebraLevel L(2);
        const Integrand s = Integrand::predictable(L, 1, 1, [L](const PathPrefix& p, Eigen::MatrixXd& out) {
            CdReal a(L);
            for (std::size_t k = 0; k < L.dim(); ++k) a[k] = std::tanh(p.current()[static_cast<Eigen::Index>(k)]);
            a[0] += 0.5;
            const Eigen::MatrixXd la = left_mult_matrix(a);
            const auto d = la.rows();
            out.setZero(2 * d, 2 * d);
            out.topLeftCorner(d, d) = la;
            out.bottomRightCorner(d, d) = la;
        });
        out.push_back({"left_mult_by_path", s, ensemble(real_cov(L, 1))});
    }
    {
        const AlgebraLevel L(2);
        std::vector<IntegrandFn> slots;
        for (int j = 0; j < 4; ++j) {
            const Eigen::MatrixXd m = ar_op(in.matrix(L, 2, 2)).realized().m;
            slots.emplace_back([m](const PathPrefix& p, Eigen::MatrixXd& o) { o = m * (1.0 + std::tanh(p.current()[0])); });
        }
        out.push_back({"elementary_steps", Integrand::step(L, 2, 2, TimeGrid::uniform(cfg.a, cfg.b, 4), slots),
                       ensemble(real_cov(L, 2))});
    }
    {
        const AlgebraLevel L(1);
        const Integrand c = Integrand::constant(ar_op(in.matrix(L, 2, 2)));
        const Integrand p = Integrand::predictable(L, 2, 2, [L](const PathPrefix& pr, Eigen::MatrixXd& o) {
            o = std::sin(pr.current()[0]) * RealizedOp::identity(L, 2).m;
        }, 2.0);
        out.push_back({"sum_constant_predictable", Integrand::sum(c, p), ensemble(real_cov(L, 2))});
    }
    {
        const AlgebraLevel L(2);
        const ComplexCovariance u(CovarianceOperator({{in.cov_scalar(L), in.spd(1)}, {in.cov_scalar(L), in.spd(2)}}));
        out.push_back({"two_blocks", Integrand::constant(ar_op(in.matrix(L, 2, 3))), ensemble(u)});
    }
    {
        const AlgebraLevel L(3);
        const Eigen::MatrixXd m = ar_op(in.matrix(L, 1, 1)).realized().m;
        const Integrand s = Integrand::predictable(L, 1, 1, [m](const PathPrefix& p, Eigen::MatrixXd& o) {
            o = m / (1.0 + p.current().squaredNorm());
        });
        out.push_back({"octonion_by_path", s, ensemble(real_cov(L, 1))});
    }
    for (int j = 0; j < 2; ++j) {
        const AlgebraLevel L(1 + j);
        const ComplexCovariance u(CovarianceOperator({{in.cov_scalar(L), in.spd(2)}}),
                                  CovarianceOperator({{in.cov_scalar(L), in.spd(2)}}));
        const RightLinearOp s = RightLinearOp::from_parts(in.matrix(L, 2, 2), in.matrix(L, 2, 2, 0.5));
        IntegralCase c{"with_i_part_" + std::to_string(j + 1), Integrand::constant(s), ensemble(u)};
        c.isometry = false;
        out.push_back(std::move(c));
    }
    return out;
}

nlohmann::json battery_labels(const std::vector<IntegralCase>& cases) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : cases) j.push_back(c.label);
    return j;
}

}  // namespace

ExperimentResult experiment_isometry(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "isometry";
    res.anchor = "Ito isometry E<eta, eta> = E int Tr({S U^1/2}{(U^1/2)* S*}) and the norm bound E||eta||^2 <= max||U_k^1/2||_2^2 E int ||S||_2^2";
    const auto cases = integral_battery(cfg, cfg.replicas);
    res.inputs = {{"replicas", cfg.replicas}, {"grid", cfg.integral_grid}, {"cases", battery_labels(cases)}};
    const std::size_t K = cfg.integral_grid;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const IntegralCase& c = cases[i];
        CheckGroup g;
        if (c.isometry) {
            const CheckGroup iso = isometry_check(c.s, c.ens, K, threads);
            g.append(iso);
            if (!std::isnan(c.exact_rhs)) {
                const double rhs = iso.value("isometry", "rhs");
                g.add("rhs_equals_oracle", std::abs(rhs - c.exact_rhs) <= 1e-12 * c.exact_rhs)
                    .set("rhs", rhs)
                    .set("oracle", c.exact_rhs);
            }
        }
        g.append(bound_check(c.s, c.ens, K, threads));
        g.append(zero_mean_check(c.s, c.ens, K, threads));
        res.checks.append(g, vdetail::case_prefix(i) + c.label + "/");
    }
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_martingale(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "martingale";
    res.anchor = "stochastic integrals of predictable integrands are martingales; non-adapted control must be detected";
    const auto cases = integral_battery(cfg, cfg.replicas);
    const std::size_t K = cfg.integral_grid;
    res.inputs = {{"replicas", cfg.replicas}, {"grid", K}, {"l1", K / 2}, {"l2", K}, {"bins", 8},
                  {"cases", battery_labels(cases)}};
    for (std::size_t i = 0; i < cases.size(); ++i)
        res.checks.append(martingale_check(cases[i].s, cases[i].ens, K / 2, K, threads),
                          vdetail::case_prefix(i) + cases[i].label + "/");

    // Look-ahead control: the sign of the next increment is not predictable.
    const AlgebraLevel L(1);
    const Eigen::MatrixXd id = RealizedOp::identity(L, 1).m;
    const Integrand look = Integrand::anticipating(L, 1, 1, [id](const PathPrefix& p, Eigen::MatrixXd& out) {
        const auto l = static_cast<Eigen::Index>(p.l);
        out = ((*p.full)(0, l + 1) - (*p.full)(0, l) >= 0.0 ? 1.0 : -1.0) * id;
    });
    const ComplexCovariance u(CovarianceOperator::identity(L, 1), CovarianceOperator::identity(L, 1));
    const PathEnsemble ens(TimeGrid::uniform(cfg.a, cfg.b, K), u, CdVector(L, 1), vdetail::sub_seed(cfg.seed, 9),
                           cfg.replicas);
    const CheckGroup bad = martingale_check(look, ens, K / 2, K, threads);
    res.checks.add("lookahead_control_rejected", !bad.at("unconditional_mean").passed && !bad.passed())
        .set("unconditional_max_abs_z", bad.value("unconditional_mean", "max_abs_z"))
        .set("binned_max_abs_z", bad.value("binned_conditional_mean", "max_abs_z"));
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_chebyshev(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "chebyshev";
    res.anchor = "maximal inequalities P{sup||eta|| > beta} <= alpha/beta^2 + P{int||S||_2^2 > alpha} and the Doob form";
    const std::size_t K = cfg.integral_grid;
    const TimeGrid grid = TimeGrid::uniform(cfg.a, cfg.b, K);
    Inputs in(cfg.seed, 701);
    nlohmann::json params = nlohmann::json::array();

    const AlgebraLevel L0(0);
    const PathEnsemble ens0(grid, ComplexCovariance(CovarianceOperator::identity(L0, 1), CovarianceOperator::identity(L0, 1)),
                            CdVector(L0, 1), vdetail::sub_seed(cfg.seed, 10), cfg.replicas);
    const Integrand id = Integrand::constant(RealizedOp::identity(L0, 1));
    res.checks.append(chebyshev_check(id, ens0, 1e3, 1.0, threads), "beta_huge/");
    res.checks.append(chebyshev_check(id, ens0, 1.0, 1.0, threads), "beta_one/");
    params.push_back({{"case", "beta_huge"}, {"beta", 1e3}, {"alpha", 1.0}});
    params.push_back({{"case", "beta_one"}, {"beta", 1.0}, {"alpha", 1.0}});

    const auto cases = integral_battery(cfg, cfg.replicas);
    for (std::size_t i = 0; i < 10; ++i) {
        const double beta = in.uniform(1.5, 5.0), alpha = in.uniform(0.5, 4.0);
        const IntegralCase& c = cases[i % cases.size()];
        res.checks.append(chebyshev_check(c.s, c.ens, beta, alpha, threads), vdetail::case_prefix(i) + c.label + "/");
        params.push_back({{"case", c.label}, {"beta", beta}, {"alpha", alpha}});
    }
    res.inputs = {{"replicas", cfg.replicas}, {"grid", K}, {"cases", params}};
    res.wall_time_s = sw.seconds();
    return res;
}

}  // namespace cdstoch
