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
#include <array>
#include <cmath>

#include "cdstoch/algebra.hpp"
#include "cdstoch/linops.hpp"
#include "verify_util.hpp"

namespace cdstoch {

using vdetail::Inputs;

namespace {

// Published multiplication tables as triples (a, b, c): e_a e_b = e_c, cyclic, anti-commuting.
constexpr std::array<std::array<int, 3>, 1> kQuaternionTriples{{{1, 2, 3}}};
constexpr std::array<std::array<int, 3>, 7> kOctonionTriples{
    {{1, 2, 3}, {1, 4, 5}, {1, 7, 6}, {2, 4, 6}, {2, 5, 7}, {3, 4, 7}, {3, 6, 5}}};

template <std::size_t N>
double table_mismatch(int r, const std::array<std::array<int, 3>, N>& triples) {
    const AlgebraLevel L(r);
    const auto d = static_cast<int>(L.dim());
    // expected[p][q] = (sign, index)
    std::vector<std::vector<std::pair<int, int>>> expected(d, std::vector<std::pair<int, int>>(d, {0, 0}));
    for (int p = 0; p < d; ++p) {
        expected[0][p] = {1, p};
        expected[p][0] = {1, p};
        if (p > 0) expected[p][p] = {-1, 0};
    }
    for (const auto& t : triples) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
            expected[a][b] = {1, c};
            expected[b][a] = {-1, c};
        }
    }
    double worst = 0.0;
    for (int p = 0; p < d; ++p) {
        for (int q = 0; q < d; ++q) {
            const CdReal got = cd_mul(CdReal::unit(L, p), CdReal::unit(L, q));
            CdReal want(L);
            want[static_cast<std::size_t>(expected[p][q].second)] = expected[p][q].first;
            if (expected[p][q].first == 0) return 1.0;  // table entry missing
            for (int k = 0; k < d; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
        }
    }
    return worst;
}

double abs_(const CdReal& x) { return std::sqrt(cd_abs2(x)); }

double rel_err(const CdReal& a, const CdReal& b, double scale) { return abs_(a - b) / std::max(scale, 1e-300); }

}  // namespace

ExperimentResult experiment_algebra(const RunConfig& cfg, int) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "algebra";
    res.anchor = "Cayley-Dickson multiplication tables, norm multiplicativity, zero divisors, Moufang identities";
    const std::size_t pairs = 10000;
    res.inputs = {{"pairs_per_level", pairs}, {"levels", {0, 1, 2, 3}}};
    CheckGroup& g = res.checks;

    const double qt = table_mismatch(2, kQuaternionTriples);
    g.add("quaternion_table", qt == 0.0).set("max_abs_mismatch", qt);
    const double ot = table_mismatch(3, kOctonionTriples);
    g.add("octonion_table", ot == 0.0).set("max_abs_mismatch", ot);

    {
        Inputs in(cfg.seed, 101);
        double worst = 0.0;
        for (int r = 0; r <= 3; ++r) {
            const AlgebraLevel L(r);
            for (std::size_t i = 0; i < pairs; ++i) {
                const CdReal a = in.real(L), b = in.real(L);
                const double na = abs_(a), nb = abs_(b);
                worst = std::max(worst, std::abs(abs_(cd_mul(a, b)) - na * nb) / (na * nb));
            }
        }
        g.add("norm_multiplicative", worst <= 1e-12).set("max_rel_err", worst).set("pairs", double(4 * pairs));
        double r4 = 0.0;
        const AlgebraLevel L4(4);
        for (std::size_t i = 0; i < 1000; ++i) {
            const CdReal a = in.real(L4), b = in.real(L4);
            r4 = std::max(r4, std::abs(abs_(cd_mul(a, b)) - abs_(a) * abs_(b)) / (abs_(a) * abs_(b)));
        }
        g.add("norm_multiplicative_fails_at_r4", r4 > 1e-6, false).set("max_rel_err", r4);
    }
    {
        bool none_low = true;
        for (int r = 0; r <= 3; ++r) none_low = none_low && !find_zero_divisor_pair(AlgebraLevel(r)).has_value();
        const auto zd = find_zero_divisor_pair(AlgebraLevel(4));
        double prod = 1.0, nx = 0.0, ny = 0.0;
        if (zd) {
            prod = abs_(cd_mul(zd->first, zd->second));
            nx = abs_(zd->first);
            ny = abs_(zd->second);
        }
        g.add("sedenion_zero_divisor", zd.has_value() && prod <= 1e-15 && nx > 0 && ny > 0)
            .set("abs_product", prod)
            .set("abs_x", nx)
            .set("abs_y", ny);
        g.add("no_zero_divisor_pairs_up_to_r3", none_low);
    }
    {
        Inputs in(cfg.seed, 102);
        const AlgebraLevel L(3);
        double alt = 0.0, mouf = 0.0, assoc = 0.0;
        for (std::size_t i = 0; i < pairs; ++i) {
            const CdReal x = in.real(L), y = in.real(L), z = in.real(L);
            const double sx = abs_(x), sy = abs_(y), sz = abs_(z);
            alt = std::max(alt, rel_err(x * (x * y), (x * x) * y, sx * sx * sy));
            alt = std::max(alt, rel_err((y * x) * x, y * (x * x), sx * sx * sy));
            const double s4 = sx * sx * sy * sz;
            mouf = std::max(mouf, rel_err(z * (x * (z * y)), ((z * x) * z) * y, s4 * sz / sx));
            mouf = std::max(mouf, rel_err(x * (z * (y * z)), ((x * z) * y) * z, s4 * sz / sx));
            mouf = std::max(mouf, rel_err((z * x) * (y * z), (z * (x * y)) * z, s4 * sz / sx));
            mouf = std::max(mouf, rel_err((z * x) * (y * z), z * ((x * y) * z), s4 * sz / sx));
            assoc = std::max(assoc, rel_err((x * y) * z, x * (y * z), sx * sy * sz));
        }
        g.add("alternativity_r3", alt <= 1e-12).set("max_rel_err", alt).set("triples", double(pairs));
        g.add("moufang_r3", mouf <= 1e-12).set("max_rel_err", mouf).set("triples", double(pairs));
        g.add("nonassociative_r3", assoc > 1e-3, false).set("max_rel_associator", assoc);
    }
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_sqrt(const RunConfig& cfg, int) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "sqrt";
    res.anchor = "square roots in A_r and A_{r,C} with the positive branch on positive reals";
    const std::size_t count = 10000;
    res.inputs = {{"inputs", count}, {"levels", {0, 1, 2, 3, 4, 5}}};
    CheckGroup& g = res.checks;
    Inputs in(cfg.seed, 201);
    double worst_r = 0.0, worst_c = 0.0;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const AlgebraLevel L(static_cast<int>(i % 6));
        const CdReal a = in.real(L);
        if (a.pure().is_zero() && a.real() < 0.0) {
            ++skipped;
            continue;
        }
        const CdReal s = cd_sqrt(a);
        worst_r = std::max(worst_r, abs_(cd_mul(s, s) - a) / abs_(a));
    }
    for (std::size_t i = 0; i < count; ++i) {
        const AlgebraLevel L(static_cast<int>(i % 6));
        const CdComplex a = in.complex(L);
        try {
            const CdComplex s = cdc_sqrt(a);
            worst_c = std::max(worst_c, std::sqrt(cdc_norm2(cdc_mul(s, s) - a) / cdc_norm2(a)));
        } catch (const CdError&) {
            ++skipped;
        }
    }
    g.add("cd_sqrt_roundtrip", worst_r <= 1e-10).set("max_rel_err", worst_r).set("inputs", double(count));
    g.add("cdc_sqrt_roundtrip", worst_c <= 1e-10).set("max_rel_err", worst_c).set("inputs", double(count));
    g.add("degenerate_inputs_skipped", true, false).set("count", double(skipped));

    const AlgebraLevel L3(3);
    const CdReal four = cd_sqrt(CdReal::scalar(L3, 4.0));
    const CdComplex four_c = cdc_sqrt(CdComplex::from_real(CdReal::scalar(L3, 4.0)));
    g.add("sqrt_of_4_is_2", four == CdReal::scalar(L3, 2.0) && four_c.re == CdReal::scalar(L3, 2.0) && four_c.im.is_zero())
        .set("cd_sqrt", four[0])
        .set("cdc_sqrt_re", four_c.re[0]);

    bool positive = true;
    for (int i = 0; i < 100; ++i) {
        const double v = in.uniform(1e-6, 1e6);
        const CdReal s = cd_sqrt(CdReal::scalar(L3, v));
        positive = positive && s[0] > 0.0 && s.pure().is_zero() && std::abs(s[0] * s[0] - v) <= 1e-12 * v;
    }
    g.add("positive_branch_on_positive_reals", positive);

    auto throws_with = [](auto fn, Errc code) {
        try {
            fn();
        } catch (const CdError& e) {
            return e.code() == code;
        }
        return false;
    };
    const CdComplex nil(CdReal::unit(L3, 1), CdReal::unit(L3, 2));  // (i_1 + i i_2)^2 = 0
    g.add("nilpotent_rejected", throws_with([&] { (void)cdc_sqrt(nil); }, Errc::nilpotent_no_root));
    g.add("negative_real_rejected",
          throws_with([&] { (void)cd_sqrt(CdReal::scalar(L3, -1.0)); }, Errc::negative_real_no_canonical_root));
    res.wall_time_s = sw.seconds();
    return res;
}

ExperimentResult experiment_linops(const RunConfig& cfg, int) {
    vdetail::Stopwatch sw;
    ExperimentResult res;
    res.name = "linops";
    res.anchor = "right-linear operators: realization, trace formulas, ||S|| <= ||S||_2, covariance square roots";
    const std::size_t ops = 10000;
    res.inputs = {{"random_operators", ops}};
    CheckGroup& g = res.checks;
    Inputs in(cfg.seed, 301);

    auto random_op = [&](AlgebraLevel L, std::size_t h, std::size_t n) {
        return RightLinearOp(in.matrix(L, h, n), in.matrix(L, h, n), in.matrix(L, h, n), in.matrix(L, h, n));
    };

    {
        double worst = 0.0;
        for (std::size_t i = 0; i < 1000; ++i) {
            const AlgebraLevel L(static_cast<int>(i % 6));
            const std::size_t h = 1 + i % 3, n = 1 + (i / 3) % 3;
            const RightLinearOp op = random_op(L, h, n);
            const CdVector x = in.vector(L, n);
            const Eigen::VectorXd a = to_vec(op_apply(op, x)), b = to_vec(op_apply(op.realized(), x));
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
        }
        g.add("structured_vs_realized", worst <= 1e-12).set("max_rel_err", worst).set("operators", 1000.0);
    }
    {
        double worst = 0.0, worst_high = 0.0;
        for (std::size_t i = 0; i < 1000; ++i) {
            const int r = static_cast<int>(i % 6);
            const CdMatrix a = in.matrix(AlgebraLevel(r), 1 + i % 3, 1 + (i / 3) % 3);
            const double t0 = op_trace_aa_star(a);
            const double e = std::max(std::abs(op_trace_aa_star_by_basis(a) - t0),
                                      std::abs(op_trace_aa_star_by_entries(a) - t0)) / t0;
            (r <= 3 ? worst : worst_high) = std::max(r <= 3 ? worst : worst_high, e);
        }
        g.add("trace_formulas_agree", worst <= 1e-12).set("max_rel_err", worst);
        g.add("trace_formulas_r4_r5", true, false).set("max_rel_err", worst_high);
    }
    {
        double worst = -1.0;
        std::size_t violations_high = 0;
        double op_norm_err = 0.0;
        for (std::size_t i = 0; i < ops; ++i) {
            const AlgebraLevel L(static_cast<int>(i % 4));
            const RightLinearOp op = random_op(L, 1 + i % 2, 1 + (i / 2) % 2);
            const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(op.realized().m).singularValues()[0];
            const double hs = std::sqrt(hs_norm2(op));
            worst = std::max(worst, sigma / hs - 1.0);
            if (i < 100) op_norm_err = std::max(op_norm_err, std::abs(op_norm(op) - sigma) / sigma);
        }
        for (std::size_t i = 0; i < 200; ++i) {
            const RightLinearOp op = random_op(AlgebraLevel(4), 1, 1);
            const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(op.realized().m).singularValues()[0];
            if (sigma > std::sqrt(hs_norm2(op)) * (1.0 + 1e-12)) ++violations_high;
        }
        g.add("op_norm_le_hs_norm", worst <= 1e-12).set("max_ratio_minus_1", worst).set("operators", double(ops));
        g.add("op_norm_power_iteration", op_norm_err <= 1e-6).set("max_rel_err_vs_svd", op_norm_err);
        g.add("op_norm_le_hs_norm_r4", true, false).set("violations_of_200", double(violations_high));
    }
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < 300; ++i) {
            const AlgebraLevel L(static_cast<int>(i % 4));
            std::vector<CovarianceOperator::Block> blocks;
            for (std::size_t j = 0; j < 1 + i % 3; ++j) blocks.push_back({in.cov_scalar(L), in.spd(1 + (i + j) % 3)});
            const CovarianceOperator u(blocks);
            const Eigen::MatrixXd s = cov_sqrt(u).realized().m;
            const Eigen::MatrixXd want = u.as_operator().realized().m;
            worst = std::max(worst, (s * s - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff());
        }
        g.add("cov_sqrt_squared", worst <= 1e-10).set("max_rel_err", worst).set("covariances", 300.0);
    }
    {
        double worst = 0.0, full = 0.0;
        for (std::size_t i = 0; i < 1000; ++i) {
            const AlgebraLevel L(static_cast<int>(i % 6));
            const std::size_t h = 1 + i % 2, n = 1 + (i / 2) % 2;
            const RightLinearOp op = random_op(L, h, n);
            const RightLinearOp adj = op_adjoint(op);
            const CdVector x = in.vector(L, n), y = in.vector(L, h);
            const double lhs = real_inner(op_apply(op, x), y), rhs = real_inner(x, op_apply(adj, y));
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
            if (L.r() == 3) full = std::max(full, std::sqrt(cdc_norm2(cdc_inner(op_apply(op, x), y) - cdc_inner(x, op_apply(adj, y)))));
        }
        g.add("adjoint_real_inner", worst <= 1e-12).set("max_rel_err", worst);
        g.add("adjoint_full_inner_residual_r3", true, false).set("max_residual", full);
    }
    {
        double semi = 0.0, growth = -1.0;
        for (std::size_t i = 0; i < 100; ++i) {
            const AlgebraLevel L(static_cast<int>(i % 4));
            const RealizedOp gop = random_op(L, 2, 2).realized();
            const double t1 = in.uniform(0.05, 0.5), t2 = in.uniform(0.05, 0.5);
            const Eigen::MatrixXd lhs = op_exp_left(gop, t1).m * op_exp_left(gop, t2).m;
            const Eigen::MatrixXd rhs = op_exp_left(gop, t1 + t2).m;
            semi = std::max(semi, (lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff());
            const double ng = Eigen::JacobiSVD<Eigen::MatrixXd>(gop.m).singularValues()[0];
            const double ne = Eigen::JacobiSVD<Eigen::MatrixXd>(rhs).singularValues()[0];
            growth = std::max(growth, ne / std::exp(ng * (t1 + t2)) - 1.0);
        }
        g.add("exp_semigroup", semi <= 1e-12).set("max_rel_err", semi);
        g.add("exp_growth_bound", growth <= 1e-12).set("max_ratio_minus_1", growth);
    }
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < 300; ++i) {
            const AlgebraLevel L(static_cast<int>(i % 4));
            const std::size_t n = 1 + i % 2;
            const CovarianceOperator u0({{in.cov_scalar(L), in.spd(n)}}), u1({{in.cov_scalar(L), in.spd(n)}});
            const ComplexCovariance u(u0, u1);
            const RightLinearOp s = random_op(L, 2, n);
            const double a = f_functional(s, u), b = f_functional(s.realized(), u);
            worst = std::max(worst, std::abs(a - b) / a);
        }
        g.add("f_functional_structured_vs_realized", worst <= 1e-12).set("max_rel_err", worst);
    }
    res.wall_time_s = sw.seconds();
    return res;
}

}  // namespace cdstoch
