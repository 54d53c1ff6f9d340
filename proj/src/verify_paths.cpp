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
#include <complex>
#include <limits>

#include "cdstoch/integral.hpp"
#include "cdstoch/paths.hpp"
#include "verify_util.hpp"

namespace cdstoch {

using vdetail::Inputs;

namespace {

/// All coordinates of an MC report within k standard errors of their targets.
Check& within_se(CheckGroup& g, const std::string& name, const McReport& rep, const std::vector<double>& target,
                 double k = 4.0) {
    double worst = 0.0;
    bool ok = rep.values.size() == target.size();
    for (std::size_t c = 0; ok && c < target.size(); ++c) {
        const McEstimate& e = rep.values[c];
        // Coordinates without noise still carry rounding from w(t2) - w(t1).
        const double diff = std::max(0.0, std::abs(e.estimate - target[c]) - 1e-12 * (1.0 + std::abs(target[c])));
        if (diff == 0.0) continue;
        const double z = e.std_error > 0.0 ? diff / e.std_error : std::numeric_limits<double>::infinity();
        worst = std::max(worst, z);
        ok = ok && z <= k;
    }
    return g.add(name, ok).set("max_abs_z", worst).set("coordinates", double(target.size()));
}

std::vector<double> coeffs(const CdComplex& x) {
    std::vector<double> v(x.re.coeffs().begin(), x.re.coeffs().end());
    v.insert(v.end(), x.im.coeffs().begin(), x.im.coeffs().end());
    return v;
}

std::vector<double> scaled(const Eigen::VectorXd& p, double s) {
    std::vector<double> v(static_cast<std::size_t>(p.size()));
    for (Eigen::Index c = 0; c < p.size(); ++c) v[static_cast<std::size_t>(c)] = s * p[c];
    return v;
}

void moment_case(CheckGroup& out, const std::string& prefix, const PathEnsemble& ens, std::size_t l1, std::size_t l2,
                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs, int threads) {
    CheckGroup g;
    const double dt = ens.grid()[l2] - ens.grid()[l1];
    within_se(g, "mean_increment", increment_mean(ens, l1, l2, threads), scaled(ens.drift_vec(), dt))
        .set("elapsed", dt);
    for (const auto& [k, h] : pairs) {
        const IncrementCovariance cov = increment_cov_estimator(ens, l1, l2, k, h, threads);
        const std::string tag = "_" + std::to_string(k + 1) + std::to_string(h + 1);
        within_se(g, "second_moment" + tag, cov.increment_form, coeffs(cov.expected))
            .set("expected_i0", cov.expected.re[0])
            .set("estimate_i0", cov.increment_form.values[0].estimate);
        g.add("two_time_product" + tag, true, false)
            .set("as_stated_i0", cov.as_stated.values[0].estimate)
            .set("as_stated_i0_se", cov.as_stated.values[0].std_error)
            .set("classical_i0", cov.classical_two_time.re[0]);
    }
    out.append(g, prefix);
}

}  // namespace

ExperimentResult experiment_moments(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "moments";
    res.anchor = "increment mean (t2 - t1) p and block-diagonal second moment (t2 - t1) a_j B_j";
    const std::size_t N = cfg.replicas;
    res.inputs = {{"replicas", N}, {"grid", 4}, {"l1", 1}, {"l2", 3}};
    CheckGroup& g = res.checks;
    const TimeGrid grid = TimeGrid::uniform(cfg.a, cfg.b, 4);

    {
        const PathEnsemble ens(grid, cfg.covariance(), cfg.drift(), vdetail::sub_seed(cfg.seed, 1), N);
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        const std::size_t m = std::min<std::size_t>(cfg.n, 3);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t h = k; h < m; ++h) pairs.emplace_back(k, h);
        moment_case(g, "configured/", ens, 1, 3, pairs, threads);
    }
    {
        const AlgebraLevel L(2);
        CdVector p(L, 2);
        p[0].re[0] = 1.0;
        p[0].im[2] = -0.5;
        p[1].re[3] = 0.75;
        const ComplexCovariance u(CovarianceOperator::identity(L, 2), CovarianceOperator::identity(L, 2));
        const PathEnsemble ens(TimeGrid::uniform(0.0, 1.0, 4), u, p, vdetail::sub_seed(cfg.seed, 2), N);
        moment_case(g, "identity_with_drift/", ens, 1, 3, {{0, 0}, {0, 1}}, threads);
    }
    {
        const AlgebraLevel L(2);
        Eigen::MatrixXd b2(2, 2);
        b2 << 2.0, 0.5, 0.5, 1.0;
        const ComplexCovariance u(CovarianceOperator({{CdReal::scalar(L, 1.0), Eigen::MatrixXd::Identity(1, 1)},
                                                      {CdReal::scalar(L, 1.5), b2}}));
        const PathEnsemble ens(TimeGrid::uniform(0.0, 1.0, 4), u, CdVector(L, 3), vdetail::sub_seed(cfg.seed, 3), N);
        moment_case(g, "cross_block/", ens, 0, 4, {{0, 1}, {0, 2}, {1, 2}}, threads);
    }
    {
        const AlgebraLevel L(2);
        const ComplexCovariance u(CovarianceOperator({{CdReal::unit(L, 1), Eigen::MatrixXd::Identity(1, 1)}}));
        const PathEnsemble ens(TimeGrid::uniform(0.0, 1.0, 4), u, CdVector(L, 1), vdetail::sub_seed(cfg.seed, 4), N);
        moment_case(g, "direction_i1/", ens, 1, 3, {{0, 0}}, threads);
    }
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_charfn(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "charfn";
    res.anchor = "characteristic functional exp(i t y(p) - t |R^T c|^2 / 2) and its semigroup property";
    const std::size_t N = cfg.replicas, cases = 20;
    res.inputs = {{"replicas", N}, {"cases", cases}, {"grid", 4}, {"mahalanobis2_limit", 9.21}};
    CheckGroup& g = res.checks;
    Inputs in(cfg.seed, 501);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 4);
    for (std::size_t i = 0; i < cases; ++i) {
        const AlgebraLevel L(static_cast<int>(i % 4));
        const std::size_t n = 1 + (i / 4) % 2;
        std::vector<CovarianceOperator::Block> b0{{in.cov_scalar(L), in.spd(n)}};
        std::optional<CovarianceOperator> u1;
        if (i % 2 == 0) u1 = CovarianceOperator({{in.cov_scalar(L), in.spd(n)}});
        const ComplexCovariance u(CovarianceOperator(b0), u1);
        const CdVector p = in.vector(L, n, 0.5);
        const std::size_t d = real_dim(L, n);
        Eigen::VectorXd c(static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = in.gauss() * 0.8 / std::sqrt(static_cast<double>(d));
        const RealFunctional y(L, n, c);
        const PathEnsemble ens(grid, u, p, vdetail::sub_seed(cfg.seed, 100 + i), N);
        const auto est = char_functional_estimator(ens, y, {1, 3, 4}, threads);
        const std::complex<double> oracle = char_functional_closed_form(u, p, y, 1.0);
        const double m2 = est[2].mahalanobis2(oracle);

        CheckGroup cg;
        cg.add("oracle", m2 < 9.21)
            .set("mahalanobis2", m2)
            .set("estimate_re", est[2].value.real())
            .set("estimate_im", est[2].value.imag())
            .set("oracle_re", oracle.real())
            .set("oracle_im", oracle.imag());
        auto se = [](const ComplexEstimate& e) { return std::sqrt(e.var_re + e.var_im); };
        const std::complex<double> product = est[0].value * est[1].value;
        const double gap = std::abs(est[2].value - product);
        const double combined = se(est[2]) + std::abs(est[1].value) * se(est[0]) + std::abs(est[0].value) * se(est[1]);
        cg.add("semigroup", gap <= 4.0 * combined).set("abs_gap", gap).set("combined_se", combined);
        g.append(cg, vdetail::case_prefix(i));
    }
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_continuity(const RunConfig& cfg, int threads) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "continuity";
    res.anchor = "stochastic continuity of w and of stochastic integrals; l.i.m. under grid refinement";
    const std::size_t K = 128;
    const std::size_t N = cfg.replicas;
    const double eps = cfg.continuity_eps;
    res.inputs = {{"replicas", N}, {"grid", K}, {"eps", eps}};
    CheckGroup& g = res.checks;
    const AlgebraLevel L0(0);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, K);
    const ComplexCovariance u(CovarianceOperator::identity(L0, 1), CovarianceOperator::identity(L0, 1));
    const PathEnsemble ens(grid, u, CdVector(L0, 1), vdetail::sub_seed(cfg.seed, 6), N);

    const CheckGroup w = stochastic_continuity_check(Integrand::constant(RealizedOp::identity(L0, 1)), ens, eps, {},
                                                     threads);
    g.append(w, "w/");
    double worst = 0.0;
    bool oracle_ok = true;
    for (std::size_t s = 1; s < K; s *= 2) {
        const std::string tag = "s" + std::to_string(s);
        const double delta = static_cast<double>(s) / static_cast<double>(K);
        // ||x||^2 = 2 (x_re^2 + x_im^2) with both parts N(0, delta).
        const double oracle = std::exp(-eps * eps / (4.0 * delta));
        const double est = w.value("tail_table", "p_mean_" + tag);
        const double se = w.value("tail_table", "p_mean_se_" + tag);
        oracle_ok = oracle_ok && std::abs(est - oracle) <= 4.0 * se + 1e-12;
        if (se > 0.0) worst = std::max(worst, std::abs(est - oracle) / se);
    }
    g.add("w/gaussian_tail_oracle", oracle_ok).set("max_abs_z", worst);

    const AlgebraLevel L1(1);
    const ComplexCovariance u1(CovarianceOperator::identity(L1, 1), CovarianceOperator::identity(L1, 1));
    const PathEnsemble ens1(grid, u1, CdVector(L1, 1), vdetail::sub_seed(cfg.seed, 7), N);
    const Integrand damped = Integrand::predictable(L1, 1, 1, [L1](const PathPrefix& p, Eigen::MatrixXd& out) {
        const double s = std::cos(std::sqrt(vec_norm2(p.current())));
        out = s * RealizedOp::identity(L1, 1).m;
    }, 1.0);
    g.append(stochastic_continuity_check(damped, ens1, eps, {}, threads), "integral/");

    const Integrand state = Integrand::predictable(L1, 1, 1, [L1](const PathPrefix& p, Eigen::MatrixXd& out) {
        out = std::sqrt(vec_norm2(p.current())) * RealizedOp::identity(L1, 1).m;
    });
    const PathEnsemble ens2(grid, u1, CdVector(L1, 1), vdetail::sub_seed(cfg.seed, 8), std::min<std::size_t>(N, 5000));
    g.append(refinement_check(state, ens2, 4, threads), "refinement/");
    res.wall_time_s = sw.seconds();
    return res;
}

}  // namespace cdstoch
