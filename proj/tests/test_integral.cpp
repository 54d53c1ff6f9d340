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

#include <cmath>

#include "cdstoch/integral.hpp"
#include "test_util.hpp"

using namespace cdstoch;

namespace {

ComplexCovariance real_identity(AlgebraLevel L, std::size_t n) { return ComplexCovariance(CovarianceOperator::identity(L, n)); }
ComplexCovariance full_identity(AlgebraLevel L, std::size_t n) {
    return ComplexCovariance(CovarianceOperator::identity(L, n), CovarianceOperator::identity(L, n));
}

CdMatrix diag(AlgebraLevel L, std::size_t n, const CdReal& a) {
    CdMatrix m(L, n, n);
    for (std::size_t j = 0; j < n; ++j) m(j, j) = a;
    return m;
}

/// Left multiplication by b + i c on every component.
RightLinearOp complex_mult(AlgebraLevel L, std::size_t n, const CdComplex& x) {
    return RightLinearOp::from_parts(diag(L, n, x.re), diag(L, n, x.im));
}

double max_diff(const CdVector& a, const CdVector& b) {
    return (to_vec(a) - to_vec(b)).cwiseAbs().maxCoeff();
}

Integrand scaled_by_state(AlgebraLevel L, std::size_t n) {
    return Integrand::predictable(L, n, n, [L, n](const PathPrefix& p, Eigen::MatrixXd& out) {
        const double s = std::sqrt(vec_norm2(p.current()));
        out = s * RealizedOp::identity(L, n).m;
    });
}

}  // namespace

TEST_CASE("elementary integral: telescoping, single step, t = a") {
    const AlgebraLevel L(2);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 8);
    const ComplexCovariance u = full_identity(L, 2);
    const auto n0 = wiener_sample(g, 2, 5, 0, 0), n1 = wiener_sample(g, 2, 5, 0, 1);
    const auto path = u_path(g, n0, n1, u, CdVector(L, 2));

    const Integrand id = Integrand::constant(RealizedOp::identity(L, 2));
    for (std::size_t l = 0; l <= g.steps(); ++l) {
        const CdVector got = elementary_integral(id, g, path, g[l]);
        CHECK(max_diff(got, path[l] - path[0]) < 1e-13);
    }
    CHECK(cdc_norm2(elementary_integral(id, g, path, 0.0)) == 0.0);

    // One slot S_0 on (0.25, 0.5]; partition points on the grid.
    const RightLinearOp s0 = complex_mult(L, 2, CdComplex(CdReal::unit(L, 3), CdReal::unit(L, 1)));
    const Integrand step = Integrand::step(L, 2, 2, TimeGrid({0.25, 0.5}),
                                           {[&](const PathPrefix&, Eigen::MatrixXd& out) { out = s0.realized().m; }});
    const CdVector expect = op_apply(s0, path[4] - path[2]);
    CHECK(max_diff(elementary_integral(step, g, path, 1.0), expect) < 1e-13);
    CHECK(max_diff(elementary_integral(step, g, path, 0.5), expect) < 1e-13);
    CHECK(cdc_norm2(elementary_integral(step, g, path, 0.25)) == 0.0);
    CHECK(max_diff(elementary_integral(step, g, path, 0.375), op_apply(s0, path[3] - path[2])) < 1e-13);

    const Integrand off = Integrand::step(L, 2, 2, TimeGrid({0.3, 0.5}),
                                          {[&](const PathPrefix&, Eigen::MatrixXd& out) { out = s0.realized().m; }});
    CHECK_THROWS_AS(elementary_integral(off, g, path, 1.0), CdError);
}

TEST_CASE("step slots only see the prefix up to their left endpoint") {
    const AlgebraLevel L(0);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 4);
    const auto n0 = wiener_sample(g, 1, 3, 0);
    const auto path = u_path(g, n0, n0, real_identity(L, 1), CdVector(L, 1));
    std::size_t seen = 99;
    const Integrand step = Integrand::step(L, 1, 1, TimeGrid({0.0, 0.5, 1.0}),
                                           {[&](const PathPrefix& p, Eigen::MatrixXd& out) {
                                                seen = static_cast<std::size_t>(p.w.cols());
                                                out = Eigen::MatrixXd::Identity(2, 2);
                                            },
                                            [&](const PathPrefix& p, Eigen::MatrixXd& out) {
                                                seen = static_cast<std::size_t>(p.w.cols());
                                                out = Eigen::MatrixXd::Identity(2, 2);
                                            }});
    Eigen::MatrixXd m;
    const Eigen::MatrixXd w = path_matrix(path);
    step.evaluate(g, w, 1, m);
    CHECK(seen == 1);
    step.evaluate(g, w, 3, m);
    CHECK(seen == 3);
}

TEST_CASE("predictable integral: constant matches elementary, additivity and linearity are exact") {
    const AlgebraLevel L(3);
    const TimeGrid g = TimeGrid::uniform(0.0, 2.0, 16);
    const ComplexCovariance u = full_identity(L, 1);
    const auto n0 = wiener_sample(g, 1, 8, 4, 0), n1 = wiener_sample(g, 1, 8, 4, 1);
    const auto path = u_path(g, n0, n1, u, CdVector(L, 1));
    const Eigen::MatrixXd w = path_matrix(path);

    const RightLinearOp a = RightLinearOp::left_mult(L, 1, CdReal::unit(L, 5));
    const Integrand c = Integrand::constant(a);
    const Integrand cp = Integrand::predictable(L, 1, 1, [&](const PathPrefix&, Eigen::MatrixXd& out) {
        out = a.realized().m;
    });
    CHECK(max_diff(predictable_integral(cp, g, path, 2.0), elementary_integral(c, g, path, 2.0)) == 0.0);

    const Integrand s = scaled_by_state(L, 1);
    const Eigen::VectorXd whole = integrate_range(s, g, w, 0, 16);
    const Eigen::VectorXd split = integrate_range(s, g, w, 0, 7) + integrate_range(s, g, w, 7, 16);
    CHECK((whole - split).cwiseAbs().maxCoeff() < 1e-13);

    const Integrand both = Integrand::sum(s, c);
    const Eigen::VectorXd lhs = integrate_range(both, g, w, 0, 16);
    const Eigen::VectorXd rhs = whole + integrate_range(c, g, w, 0, 16);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("integrate fills the quadrature trace") {
    const AlgebraLevel L(1);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 10);
    const ComplexCovariance u = full_identity(L, 1);
    const PathEnsemble ens(g, u, CdVector(L, 1), 1, 1);
    PathBuffer buf;
    ens.generate(0, buf);
    Eigen::MatrixXd eta;
    StepTrace tr;
    const RightLinearOp a = complex_mult(L, 1, CdComplex(CdReal::scalar(L, 2.0), CdReal::unit(L, 1)));
    integrate(Integrand::constant(a), g, buf.w, eta, &tr, &u);
    CHECK(tr.int_f[10] == doctest::Approx(f_functional(a, u)).epsilon(1e-12));
    CHECK(tr.int_hs2[10] == doctest::Approx(hs_norm2(a)).epsilon(1e-12));
    CHECK(eta.col(0).isZero(0.0));
}

TEST_CASE("zero mean") {
    const AlgebraLevel L(2);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 16);
    const PathEnsemble ens(g, full_identity(L, 2), CdVector(L, 2), 31, 20000);
    CHECK(zero_mean_check(Integrand::constant(RealizedOp::identity(L, 2)), ens, 16).passed());
    CHECK(zero_mean_check(scaled_by_state(L, 2), ens, 16).passed());

    const Integrand zero = Integrand::constant(RightLinearOp::zero(L, 2, 2));
    const CheckGroup z = zero_mean_check(zero, ens, 16);
    CHECK(z.passed());
    CHECK(z.value("zero_mean", "max_abs_mean") == 0.0);
}

TEST_CASE("isometry against the classical Wiener oracle") {
    const AlgebraLevel L0(0);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 16);
    const PathEnsemble ens(g, real_identity(L0, 1), CdVector(L0, 1), 2, 20000);
    const CheckGroup id = isometry_check(Integrand::constant(RealizedOp::identity(L0, 1)), ens, 8);
    CHECK(id.passed());
    CHECK(id.value("isometry", "rhs") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(id.value("isometry", "lhs") - 0.5) < 4 * id.value("isometry", "lhs_se"));

    const AlgebraLevel L(2);
    const PathEnsemble ens2(TimeGrid::uniform(0.0, 1.0, 16), real_identity(L, 1), CdVector(L, 1), 3, 20000);
    const Integrand i1 = Integrand::constant(RightLinearOp::left_mult(L, 1, CdReal::unit(L, 1)));
    const CheckGroup u1 = isometry_check(i1, ens2, 16);
    CHECK(u1.passed());
    CHECK(u1.value("isometry", "rhs") == doctest::Approx(1.0).epsilon(1e-12));

    const CheckGroup z = isometry_check(Integrand::constant(RightLinearOp::zero(L, 1, 1)), ens2, 16);
    CHECK(z.passed());
    CHECK(z.value("isometry", "lhs") == 0.0);
    CHECK(z.value("isometry", "rhs") == 0.0);

    // Path-dependent A_r integrand.
    CHECK(isometry_check(scaled_by_state(L, 1), ens2, 16).passed());

    // An operator that maps real parts into i-parts is outside the class.
    const Integrand mix = Integrand::constant(RightLinearOp::from_parts(CdMatrix::identity(L, 1), CdMatrix::identity(L, 1)));
    CHECK_THROWS_AS(isometry_check(mix, ens2, 16), CdError);
    const PathEnsemble cplx(g, full_identity(L, 1), CdVector(L, 1), 3, 10);
    CHECK_THROWS_AS(isometry_check(i1, cplx, 16), CdError);
}

TEST_CASE("norm bound and the 2 E int F identity") {
    const AlgebraLevel L(1);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 16);
    const PathEnsemble ens(g, full_identity(L, 1), CdVector(L, 1), 4, 20000);
    const CheckGroup id = bound_check(Integrand::constant(RealizedOp::identity(L, 1)), ens, 16);
    CHECK(id.passed());
    CHECK(id.value("m1_equals_m2", "m2") == doctest::Approx(4.0).epsilon(1e-12));

    const CheckGroup z = bound_check(Integrand::constant(RightLinearOp::zero(L, 1, 1)), ens, 16);
    CHECK(z.passed());
    CHECK(z.value("m1_equals_m2", "m1") == 0.0);
    CHECK(z.value("m1_le_m3", "m3") == 0.0);

    // Random elementary integrands over a non-identity covariance.
    auto& rng = testutil::rng();
    const AlgebraLevel L2(2);
    Eigen::MatrixXd b = Eigen::MatrixXd::Random(2, 2);
    b = b * b.transpose() + Eigen::MatrixXd::Identity(2, 2);
    const ComplexCovariance u(CovarianceOperator({{CdReal(L2, {1.0, 0.3, -0.2, 0.1}), b}}),
                              CovarianceOperator({{CdReal::scalar(L2, 0.5), Eigen::MatrixXd::Identity(2, 2)}}));
    const PathEnsemble ens2(g, u, CdVector(L2, 2), 5, 20000);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<IntegrandFn> slots;
        for (int j = 0; j < 4; ++j) {
            const RightLinearOp a = complex_mult(L2, 2, testutil::random_complex(2));
            const double gain = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
            slots.emplace_back([a, gain](const PathPrefix& p, Eigen::MatrixXd& out) {
                out = a.realized().m * (gain + std::tanh(p.current()[0]));
            });
        }
        const Integrand s = Integrand::step(L2, 2, 2, TimeGrid::uniform(0.0, 1.0, 4), slots);
        const CheckGroup r = bound_check(s, ens2, 16);
        CHECK(r.passed());
    }
}

TEST_CASE("martingale property and the look-ahead control") {
    const AlgebraLevel L(1);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 16);
    const PathEnsemble ens(g, full_identity(L, 1), CdVector(L, 1), 6, 20000);
    CHECK(martingale_check(Integrand::constant(RealizedOp::identity(L, 1)), ens, 8, 16).passed());
    CHECK(martingale_check(scaled_by_state(L, 1), ens, 8, 16).passed());
    const CheckGroup z = martingale_check(Integrand::constant(RightLinearOp::zero(L, 1, 1)), ens, 8, 16);
    CHECK(z.passed());
    CHECK(z.value("binned_conditional_mean", "max_abs_z") == 0.0);

    const Eigen::MatrixXd id = RealizedOp::identity(L, 1).m;
    const Integrand look = Integrand::anticipating(L, 1, 1, [id](const PathPrefix& p, Eigen::MatrixXd& out) {
        const auto l = static_cast<Eigen::Index>(p.l);
        const double inc = (*p.full)(0, l + 1) - (*p.full)(0, l);
        out = (inc >= 0.0 ? 1.0 : -1.0) * id;
    });
    CHECK_FALSE(look.adapted());
    const CheckGroup bad = martingale_check(look, ens, 8, 16);
    CHECK_FALSE(bad.passed());
    CHECK_FALSE(bad.at("unconditional_mean").passed);
}

TEST_CASE("maximal inequalities") {
    const AlgebraLevel L(0);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 32);
    const PathEnsemble ens(g, full_identity(L, 1), CdVector(L, 1), 7, 20000);
    const Integrand id = Integrand::constant(RealizedOp::identity(L, 1));

    const CheckGroup huge = chebyshev_check(id, ens, 1e3, 1.0);
    CHECK(huge.passed());
    CHECK(huge.value("sup_norm_tail", "p_sup") == 0.0);

    const CheckGroup one = chebyshev_check(id, ens, 1.0, 1.0);
    CHECK(one.passed());
    CHECK(one.at("euclid_tail_unscaled").asserted);
    CHECK(one.value("euclid_tail_scaled", "e_int_f") == doctest::Approx(2.0).epsilon(1e-12));

    const PathEnsemble small(g, ComplexCovariance(CovarianceOperator({{CdReal::scalar(L, 0.25), Eigen::MatrixXd::Identity(1, 1)}})),
                             CdVector(L, 1), 7, 5000);
    const CheckGroup s = chebyshev_check(id, small, 1.5, 0.5);
    CHECK(s.passed());
    CHECK_FALSE(s.at("euclid_tail_unscaled").asserted);
}

TEST_CASE("stochastic continuity against the Gaussian tail") {
    const AlgebraLevel L(0);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 128);
    const double eps = 0.5;
    const PathEnsemble ens(g, full_identity(L, 1), CdVector(L, 1), 8, 20000);
    const CheckGroup r = stochastic_continuity_check(Integrand::constant(RealizedOp::identity(L, 1)), ens, eps);
    CHECK(r.passed());
    for (std::size_t s = 1; s <= 64; s *= 2) {
        const std::string tag = "s" + std::to_string(s);
        const double delta = static_cast<double>(s) / 128.0;
        // ||x||^2 = 2 (x_re^2 + x_im^2) with both parts N(0, delta): P = exp(-eps^2 / (4 delta)).
        const double oracle = std::exp(-eps * eps / (4.0 * delta));
        const double est = r.value("tail_table", "p_mean_" + tag);
        const double se = r.value("tail_table", "p_mean_se_" + tag);
        CHECK(std::abs(est - oracle) < 4.0 * se + 1e-12);
    }

    const CheckGroup z = stochastic_continuity_check(Integrand::constant(RightLinearOp::zero(L, 1, 1)), ens, eps);
    CHECK(z.passed());
    CHECK(z.value("tail_table", "p_s64") == 0.0);
}

TEST_CASE("grid refinement of a path-dependent integrand") {
    const AlgebraLevel L(1);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 128);
    const PathEnsemble ens(g, full_identity(L, 1), CdVector(L, 1), 9, 5000);
    const CheckGroup r = refinement_check(scaled_by_state(L, 1), ens, 4);
    CHECK(r.passed());
    CHECK(r.value("vanishing_under_refinement", "ratio_finest_to_coarsest") < 0.5);
}
