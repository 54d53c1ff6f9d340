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

#include <Eigen/SVD>

#include "cdstoch/linops.hpp"
#include "test_util.hpp"

using namespace cdstoch;
using testutil::random_real;
using testutil::random_vector;

namespace {

CdReal e(int r, std::size_t k) { return CdReal::unit(AlgebraLevel(r), k); }

CdMatrix random_matrix(int r, std::size_t rows, std::size_t cols) {
    CdMatrix m(AlgebraLevel(r), rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = random_real(r);
    }
    return m;
}

RightLinearOp random_op(int r, std::size_t h, std::size_t n) {
    return {random_matrix(r, h, n), random_matrix(r, h, n), random_matrix(r, h, n), random_matrix(r, h, n)};
}

double vec_diff(const CdVector& a, const CdVector& b) { return (to_vec(a) - to_vec(b)).cwiseAbs().maxCoeff(); }

Eigen::MatrixXd random_spd(Eigen::Index n) {
    Eigen::MatrixXd f(n, n);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = testutil::gauss();
    return f * f.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("op_apply basics") {
    const AlgebraLevel L(3);
    const CdVector x = random_vector(3, 3);
    CHECK(vec_diff(op_apply(RightLinearOp::identity(L, 3), x), x) == 0.0);

    const RightLinearOp j = RightLinearOp::left_mult(AlgebraLevel(2), 1, e(2, 1));
    const CdVector y = op_apply(j, CdVector::basis(AlgebraLevel(2), 1, 0, CdComplex::from_real(e(2, 2))));
    CHECK(y[0].re == e(2, 3));
    CHECK(y[0].im.is_zero());
}

TEST_CASE("right linearity on real vectors") {
    for (int r = 0; r <= kMaxLevel; ++r) {
        const AlgebraLevel L(r);
        CdVector x(L, 3), y(L, 3);
        for (std::size_t k = 0; k < 3; ++k) {
            x[k] = CdComplex::from_real(CdReal::scalar(L, testutil::gauss()));
            y[k] = CdComplex::from_real(CdReal::scalar(L, testutil::gauss()));
        }
        // A + iB operators are right linear over the complexified algebra
        const RightLinearOp j = RightLinearOp::from_parts(random_matrix(r, 2, 3), random_matrix(r, 2, 3));
        const CdComplex b = testutil::random_complex(r), c = testutil::random_complex(r);
        CHECK(vec_diff(op_apply(j, x.times(b) + y.times(c)), op_apply(j, x).times(b) + op_apply(j, y).times(c)) <
              1e-12 * 20);
        // four independent blocks are right linear over A_r only
        const RightLinearOp g = random_op(r, 2, 3);
        const CdComplex br = CdComplex::from_real(random_real(r));
        CHECK(vec_diff(op_apply(g, x.times(br)), op_apply(g, x).times(br)) < 1e-12 * 20);
    }
}

TEST_CASE("structured and realized application agree") {
    for (int r = 0; r <= kMaxLevel; ++r) {
        const RightLinearOp j = random_op(r, 3, 2);
        double worst = 0.0;
        for (int s = 0; s < 100; ++s) {
            const CdVector x = random_vector(r, 2);
            worst = std::max(worst, vec_diff(op_apply(j, x), op_apply(j.realized(), x)));
        }
        CHECK(worst < 1e-12 * 10);
    }
}

TEST_CASE("realized forms") {
    const AlgebraLevel L(2);
    const auto id = op_realize(RightLinearOp::identity(L, 2));
    CHECK(id.m.isIdentity(0.0));
    const auto li = op_realize(RightLinearOp::left_mult(L, 1, e(2, 1)));
    CHECK(li.m.rows() == 8);
    CHECK((li.m * li.m).isApprox(-Eigen::MatrixXd::Identity(8, 8)));
    CHECK(op_compose(li, li).m.isApprox(-Eigen::MatrixXd::Identity(8, 8)));
    const auto a = op_realize(random_op(2, 2, 2));
    CHECK(op_compose(RealizedOp::identity(L, 2), a).m == a.m);
    CHECK_THROWS_AS(op_compose(li, a), CdError);
}

TEST_CASE("composition is not left multiplication by the product at r = 3") {
    const AlgebraLevel L(3);
    const auto l1 = op_realize(RightLinearOp::left_mult(L, 1, e(3, 1)));
    const auto l2 = op_realize(RightLinearOp::left_mult(L, 1, e(3, 2)));
    const auto l12 = op_realize(RightLinearOp::left_mult(L, 1, e(3, 1) * e(3, 2)));
    const CdVector x = CdVector::basis(L, 1, 0, CdComplex::from_real(e(3, 4)));
    const CdVector lhs = op_apply(op_compose(l1, l2), x);
    const CdVector rhs = op_apply(l12, x);
    CHECK(vec_diff(lhs, rhs) > 1.0);
    // at r = 2 the two agree
    const AlgebraLevel Q(2);
    const auto q1 = op_realize(RightLinearOp::left_mult(Q, 1, e(2, 1)));
    const auto q2 = op_realize(RightLinearOp::left_mult(Q, 1, e(2, 2)));
    const auto q12 = op_realize(RightLinearOp::left_mult(Q, 1, e(2, 3)));
    CHECK(op_compose(q1, q2).m.isApprox(q12.m));
}

TEST_CASE("adjoint") {
    const AlgebraLevel L(3);
    const RightLinearOp id = RightLinearOp::identity(L, 2);
    const RightLinearOp ida = op_adjoint(id);
    for (int l = 0; l < 2; ++l) {
        for (int k = 0; k < 2; ++k) CHECK(ida.block(l, k) == id.block(l, k));
    }
    const RightLinearOp ji = RightLinearOp::left_mult(L, 1, e(3, 1));
    CHECK(op_adjoint(ji).block(0, 0)(0, 0) == -e(3, 1));

    for (int r = 0; r <= kMaxLevel; ++r) {
        const RightLinearOp j = random_op(r, 2, 3);
        const RightLinearOp jj = op_adjoint(op_adjoint(j));
        for (int l = 0; l < 2; ++l) {
            for (int k = 0; k < 2; ++k) CHECK(jj.block(l, k) == j.block(l, k));
        }
        const RightLinearOp ja = op_adjoint(j);
        double worst = 0.0;
        for (int s = 0; s < 200; ++s) {
            const CdVector x = random_vector(r, 3), y = random_vector(r, 2);
            worst = std::max(worst, std::abs(real_inner(op_apply(j, x), y) - real_inner(x, op_apply(ja, y))));
        }
        CHECK(worst < 1e-12 * 100);
    }
}

TEST_CASE("left multiplication transposes to conjugate multiplication") {
    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdReal a = random_real(r);
        CHECK((left_mult_matrix(a).transpose() - left_mult_matrix(cd_conj(a))).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("trace formulas") {
    const AlgebraLevel L(3);
    CHECK(op_trace_aa_star(CdMatrix::identity(L, 4)) == 4.0);
    CdMatrix one(L, 1, 1);
    one(0, 0) = e(3, 1);
    CHECK(op_trace_aa_star(one) == 1.0);
    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdMatrix a = random_matrix(r, 3, 2);
        const double t = op_trace_aa_star(a);
        CHECK(std::abs(op_trace_aa_star_by_basis(a) - t) < 1e-12 * t);
        CHECK(std::abs(op_trace_aa_star_by_entries(a) - t) < 1e-12 * t);
    }
}

TEST_CASE("hs norm") {
    const AlgebraLevel L(2);
    CHECK(hs_norm2(RightLinearOp::identity(L, 3)) == 6.0);
    CHECK(hs_norm2(RightLinearOp::zero(L, 2, 3)) == 0.0);
    const CdMatrix a = random_matrix(2, 2, 2), b = random_matrix(2, 2, 2);
    const RightLinearOp q = RightLinearOp::from_parts(a, b);
    CHECK(std::abs(hs_norm2(q) - 2 * op_trace_aa_star(a) - 2 * op_trace_aa_star(b)) < 1e-12 * hs_norm2(q));
    for (int r = 0; r <= kMaxLevel; ++r) {
        const RightLinearOp s = random_op(r, 2, 3);
        CHECK(std::abs(hs_norm2(s) - hs_norm2(s.realized())) < 1e-12 * hs_norm2(s));
    }
    for (int r = 0; r <= 3; ++r) {
        for (int k = 0; k < 50; ++k) {
            const RightLinearOp s = random_op(r, 2, 2);
            CHECK(op_norm(s) <= std::sqrt(hs_norm2(s)) * (1 + 1e-10));
        }
    }
}

TEST_CASE("op_norm") {
    const AlgebraLevel L(3);
    CHECK(op_norm(RightLinearOp::identity(L, 2)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(op_norm(RightLinearOp::left_mult(L, 1, CdReal::scalar(L, 3.0))) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(op_norm(RightLinearOp::zero(L, 2, 2)) == 0.0);
    for (int r = 0; r <= kMaxLevel; ++r) {
        const RightLinearOp s = random_op(r, 2, 3);
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.realized().m);
        CHECK(op_norm(s, 1e-13) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-6));
    }
    CHECK_THROWS_AS((void)op_norm(random_op(3, 2, 3), 1e-300, 3), CdError);
}

TEST_CASE("spd_sqrt") {
    Eigen::MatrixXd d = Eigen::Vector2d(4, 9).asDiagonal();
    CHECK(spd_sqrt(d).isApprox(Eigen::MatrixXd(Eigen::Vector2d(2, 3).asDiagonal()), 1e-14));
    CHECK(spd_sqrt(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
    const Eigen::MatrixXd b = random_spd(5);
    const Eigen::MatrixXd s = spd_sqrt(b);
    CHECK((s * s - b).norm() < 1e-10 * b.norm());
    Eigen::MatrixXd ns = Eigen::MatrixXd::Identity(2, 2);
    ns(0, 1) = 0.5;
    CHECK_THROWS_AS((void)spd_sqrt(ns), CdError);
    Eigen::MatrixXd sing = Eigen::MatrixXd::Zero(2, 2);
    sing(0, 0) = 1.0;
    try {
        (void)spd_sqrt(sing);
        FAIL("expected an error");
    } catch (const CdError& err) {
        CHECK(err.code() == Errc::not_spd);
    }
}

TEST_CASE("covariance validation names the block") {
    const AlgebraLevel L(2);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 1) = 1.0;
    try {
        CovarianceOperator({{CdReal::scalar(L, 1.0), bad}});
        FAIL("expected an error");
    } catch (const CdError& err) {
        CHECK(err.code() == Errc::invalid_covariance);
        CHECK(std::string(err.what()).find("block 1") != std::string::npos);
    }
    try {
        CovarianceOperator({{CdReal::scalar(L, 1.0), Eigen::MatrixXd::Identity(1, 1)},
                            {CdReal(L), Eigen::MatrixXd::Identity(1, 1)}});
        FAIL("expected an error");
    } catch (const CdError& err) {
        CHECK(std::string(err.what()).find("block 2") != std::string::npos);
    }
}

TEST_CASE("cov_sqrt") {
    const AlgebraLevel L(2);
    const RightLinearOp i3 = cov_sqrt(CovarianceOperator::identity(L, 3));
    CHECK(i3.realized().m.isIdentity(0.0));
    const RightLinearOp two =
        cov_sqrt(CovarianceOperator({{CdReal::scalar(L, 4.0), Eigen::MatrixXd::Identity(2, 2)}}));
    CHECK(two.realized().m.isApprox(2.0 * Eigen::MatrixXd::Identity(16, 16)));

    const CovarianceOperator u({{2.0 * e(2, 1), Eigen::MatrixXd::Constant(1, 1, 4.0)}});
    const RightLinearOp root = cov_sqrt(u);
    CHECK(testutil::max_abs_diff(root.block(0, 0)(0, 0), 2.0 * (e(2, 0) + e(2, 1))) < 1e-14);
    CHECK((root.realized().m * root.realized().m - u.as_operator().realized().m).norm() < 1e-10);

    for (int r = 0; r <= 3; ++r) {
        const AlgebraLevel lv(r);
        CdReal a1 = random_real(r), a2 = random_real(r);
        if (r == 0) {
            a1[0] = std::abs(a1[0]);
            a2[0] = std::abs(a2[0]);
        }
        const CovarianceOperator v({{a1, random_spd(2)}, {a2, random_spd(3)}});
        const Eigen::MatrixXd m = cov_sqrt(v).realized().m;
        const Eigen::MatrixXd target = v.as_operator().realized().m;
        CHECK((m * m - target).norm() < 1e-10 * target.norm());
        const RightLinearOp adj = cov_sqrt_adjoint(v);
        const RightLinearOp adj2 = op_adjoint(cov_sqrt(v));
        CHECK(adj.block(0, 0) == adj2.block(0, 0));
    }
    CHECK_THROWS_AS(cov_sqrt(CovarianceOperator({{CdReal::scalar(L, -1.0), Eigen::MatrixXd::Identity(1, 1)}})),
                    CdError);
}

TEST_CASE("noise injection") {
    const AlgebraLevel L(2);
    const ComplexCovariance u(CovarianceOperator::identity(L, 2), CovarianceOperator::identity(L, 2));
    CHECK(u.noise_dim() == 4);
    CHECK(u.injection().rows() == 16);
    CHECK(u.injection()(vec_index(L, 1, 1, 0), 3) == 1.0);
    CHECK(u.injection().squaredNorm() == 4.0);
    CHECK(u.max_sqrt_hs2() == 4.0);
    const ComplexCovariance real_only(CovarianceOperator::identity(L, 2));
    CHECK(real_only.noise_dim() == 2);
}

TEST_CASE("op_exp_left") {
    const AlgebraLevel L(3);
    CHECK(op_exp_left(RightLinearOp::zero(L, 2, 2), 1.3).m.isIdentity(1e-15));
    const auto minus = op_exp_left(RightLinearOp::identity(L, 2).scaled(-1.0), 0.7);
    CHECK(minus.m.isApprox(std::exp(-0.7) * Eigen::MatrixXd::Identity(32, 32), 1e-14));
    const RightLinearOp g = RightLinearOp::left_mult(L, 1, e(3, 1));
    for (double t : {0.3, 2.0, 7.5}) {
        const CdVector y = op_apply(op_exp_left(g, t), CdVector::basis(L, 1, 0, CdComplex::from_real(e(3, 0))));
        const CdReal expect = std::cos(t) * e(3, 0) + std::sin(t) * e(3, 1);
        CHECK(testutil::max_abs_diff(y[0].re, expect) < 1e-10);
    }
    const RightLinearOp gr = random_op(3, 2, 2);
    const auto e1 = op_exp_left(gr, 0.2), e2 = op_exp_left(gr, 0.5), e12 = op_exp_left(gr, 0.7);
    CHECK((e1.m * e2.m - e12.m).norm() <= 1e-10 * e12.m.norm());
    CHECK(op_norm(e12) <= std::exp(op_norm(gr) * 0.7) * (1 + 1e-10));
}

TEST_CASE("F functional") {
    const AlgebraLevel L(2);
    const ComplexCovariance u1(CovarianceOperator::identity(L, 1), CovarianceOperator::identity(L, 1));
    CHECK(f_functional(RightLinearOp::zero(L, 1, 1), u1) == 0.0);
    CdMatrix one = CdMatrix::identity(L, 1);
    CdMatrix z(L, 1, 1);
    const RightLinearOp s(one, z, z, z);
    CHECK(f_functional(s, u1) == 1.0);
    CHECK(f_functional(s.realized(), u1) == 1.0);
    for (int r = 0; r <= 3; ++r) {
        const AlgebraLevel lv(r);
        CdReal a1 = random_real(r);
        if (r == 0) a1[0] = std::abs(a1[0]);
        const ComplexCovariance u(CovarianceOperator({{a1, random_spd(2)}}),
                                  CovarianceOperator({{CdReal::scalar(lv, 2.0), random_spd(2)}}));
        const RightLinearOp op = random_op(r, 3, 2);
        const double f = f_functional(op, u);
        CHECK(std::abs(f_functional(op.realized(), u) - f) < 1e-12 * f);
        CHECK(std::abs(f_functional(op.scaled(-2.5), u) - 6.25 * f) < 1e-12 * f);
        CHECK(2.0 * f <= hs_norm2(op) * u.max_sqrt_hs2() * (1 + 1e-12));
    }
}
