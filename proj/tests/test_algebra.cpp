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
#include <numbers>

#include "cdstoch/algebra.hpp"
#include "test_util.hpp"

using namespace cdstoch;
using testutil::max_abs_diff;
using testutil::random_complex;
using testutil::random_real;

namespace {

CdReal e(int r, std::size_t k) { return CdReal::unit(AlgebraLevel(r), k); }

// Octonion triples (a, b, c) with e_a e_b = e_c, cyclic; the usual published table.
constexpr int kOctonionTriples[7][3] = {{1, 2, 3}, {1, 4, 5}, {1, 7, 6}, {2, 4, 6},
                                        {2, 5, 7}, {3, 4, 7}, {3, 6, 5}};

}  // namespace

TEST_CASE("identity and imaginary units") {
    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdReal x = random_real(r);
        CHECK(cd_mul(e(r, 0), x) == x);
        CHECK(cd_mul(x, e(r, 0)) == x);
        for (std::size_t k = 1; k < AlgebraLevel(r).dim(); ++k) {
            CHECK(cd_mul(e(r, k), e(r, k)) == -e(r, 0));
        }
    }
}

TEST_CASE("quaternion table") {
    CHECK(e(2, 1) * e(2, 2) == e(2, 3));
    CHECK(e(2, 2) * e(2, 1) == -e(2, 3));
    CHECK(e(2, 2) * e(2, 3) == e(2, 1));
    CHECK(e(2, 3) * e(2, 1) == e(2, 2));
    CHECK(e(2, 3) * e(2, 2) == -e(2, 1));
}

TEST_CASE("octonion table") {
    for (const auto& t : kOctonionTriples) {
        for (int rot = 0; rot < 3; ++rot) {
            const int a = t[rot], b = t[(rot + 1) % 3], c = t[(rot + 2) % 3];
            CHECK(e(3, a) * e(3, b) == e(3, c));
            CHECK(e(3, b) * e(3, a) == -e(3, c));
        }
    }
}

TEST_CASE("sign table matches recursive doubling") {
    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdReal a = random_real(r), b = random_real(r);
        CdReal ref{AlgebraLevel(r)};
        detail::doubling_product(a.coeffs(), b.coeffs(), ref.coeffs());
        CHECK(max_abs_diff(cd_mul(a, b), ref) < 1e-12);
    }
}

TEST_CASE("level mismatch throws") {
    CHECK_THROWS_AS(cd_mul(e(2, 1), e(3, 1)), CdError);
    CHECK_THROWS_AS(AlgebraLevel(6), CdError);
    CHECK_THROWS_AS(AlgebraLevel(-1), CdError);
}

TEST_CASE("conjugation") {
    CHECK(cd_conj(e(3, 0)) == e(3, 0));
    CHECK(cd_conj(e(3, 1)) == -e(3, 1));
    for (int r = 0; r <= kMaxLevel; ++r) {
        double worst = 0.0;
        for (int s = 0; s < 500; ++s) {
            const CdReal a = random_real(r), b = random_real(r);
            CHECK(cd_conj(cd_conj(a)) == a);
            worst = std::max(worst, max_abs_diff(cd_conj(a * b), cd_conj(b) * cd_conj(a)));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("abs2 and norm multiplicativity") {
    CHECK(cd_abs2(e(2, 1)) == 1.0);
    CHECK(cd_abs2(CdReal(AlgebraLevel(2), {3, 0, 4, 0})) == 25.0);
    for (int r = 0; r <= 3; ++r) {
        double worst = 0.0;
        for (int s = 0; s < 1000; ++s) {
            const CdReal a = random_real(r), b = random_real(r);
            const double lhs = cd_abs2(a * b), rhs = cd_abs2(a) * cd_abs2(b);
            worst = std::max(worst, std::abs(lhs - rhs) / rhs);
            const CdReal zz = a * cd_conj(a);
            CHECK(std::abs(zz[0] - cd_abs2(a)) < 1e-12 * cd_abs2(a));
            CHECK(max_abs_diff(zz.pure(), CdReal(a.level())) < 1e-12 * cd_abs2(a));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("zero divisors exist from r = 4") {
    for (int r = 0; r <= 3; ++r) CHECK_FALSE(find_zero_divisor_pair(AlgebraLevel(r)).has_value());
    const auto pair = find_zero_divisor_pair(AlgebraLevel(4));
    REQUIRE(pair.has_value());
    CHECK_FALSE(pair->first.is_zero());
    CHECK_FALSE(pair->second.is_zero());
    CHECK((pair->first * pair->second).is_zero());
    CHECK(cd_abs2(pair->first) * cd_abs2(pair->second) == 4.0);
}

TEST_CASE("octonion alternativity and Moufang") {
    double worst = 0.0;
    for (int s = 0; s < 2000; ++s) {
        const CdReal a = random_real(3), b = random_real(3), c = random_real(3);
        worst = std::max(worst, max_abs_diff(a * (a * b), (a * a) * b));
        worst = std::max(worst, max_abs_diff((a * b) * b, a * (b * b)));
        worst = std::max(worst, max_abs_diff((a * b) * (c * a), a * ((b * c) * a)));
    }
    CHECK(worst < 1e-12 * 100);  // products of three unit-variance factors
}

TEST_CASE("sedenions are not alternative") {
    const auto pair = find_zero_divisor_pair(AlgebraLevel(4));
    REQUIRE(pair.has_value());
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        const CdReal a = random_real(4), b = random_real(4), c = random_real(4);
        worst = std::max(worst, max_abs_diff((a * b) * (c * a), a * ((b * c) * a)));
    }
    CHECK(worst > 1e-3);
}

TEST_CASE("power associativity") {
    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdReal a = random_real(r);
        CHECK(max_abs_diff((a * a) * a, a * (a * a)) < 1e-12 * 10 * cd_abs2(a));
    }
}

TEST_CASE("cd_sqrt") {
    CHECK(cd_sqrt(CdReal::scalar(AlgebraLevel(3), 4.0)) == CdReal::scalar(AlgebraLevel(3), 2.0));
    const CdReal s = cd_sqrt(2.0 * e(2, 1));
    CHECK(max_abs_diff(s, e(2, 0) + e(2, 1)) < 1e-15);
    CHECK(cd_sqrt(CdReal(AlgebraLevel(2))).is_zero());
    try {
        (void)cd_sqrt(-e(2, 0));
        FAIL("expected an error");
    } catch (const CdError& err) {
        CHECK(err.code() == Errc::negative_real_no_canonical_root);
    }
    for (int r = 0; r <= kMaxLevel; ++r) {
        for (int k = 0; k < 200; ++k) {
            CdReal a = random_real(r);
            if (r == 0) a[0] = std::abs(a[0]);
            const CdReal root = cd_sqrt(a);
            CHECK(max_abs_diff(root * root, a) < 1e-12 * std::sqrt(cd_abs2(a)) * 4);
            CHECK(root[0] >= 0.0);
        }
    }
}

TEST_CASE("complexified product") {
    const AlgebraLevel L(2);
    const CdComplex i_unit(CdReal(L), e(2, 0));
    CHECK(i_unit * i_unit == CdComplex(-e(2, 0), CdReal(L)));
    const CdComplex x = CdComplex::from_real(e(2, 1));
    CHECK(x * i_unit == CdComplex(CdReal(L), e(2, 1)));
    CHECK(i_unit * x == CdComplex(CdReal(L), e(2, 1)));
    const CdComplex nil(e(2, 1), e(2, 2));
    CHECK(nil * nil == CdComplex(L));

    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdReal a = random_real(r), b = random_real(r);
        CHECK((CdComplex::from_real(a) * CdComplex::from_real(b)).re == a * b);
        const CdComplex u = random_complex(r), v = random_complex(r);
        const CdComplex iv(-v.im, v.re);
        const CdComplex iu(-u.im, u.re);
        const CdComplex uv = u * v;
        const CdComplex i_uv(-uv.im, uv.re);
        CHECK(max_abs_diff(u * iv, i_uv) < 1e-12 * 10);
        CHECK(max_abs_diff(iu * v, i_uv) < 1e-12 * 10);
    }
}

TEST_CASE("complexified norm") {
    const AlgebraLevel L(3);
    CHECK(cdc_norm2(CdComplex::from_real(e(3, 0))) == 2.0);
    CHECK(cdc_norm2(CdComplex(L)) == 0.0);
    CHECK(cdc_norm2(CdComplex(e(3, 1), e(3, 2))) == 4.0);
}

TEST_CASE("inner product") {
    const AlgebraLevel L(3);
    const CdVector x = CdVector::basis(L, 2, 0, CdComplex::from_real(e(3, 1)));
    CHECK(cdc_inner(x, x) == CdComplex::from_real(e(3, 0)));
    const CdVector e1 = CdVector::basis(L, 2, 0, CdComplex::from_real(e(3, 0)));
    const CdVector e2 = CdVector::basis(L, 2, 1, CdComplex::from_real(e(3, 0)));
    CHECK(cdc_inner(e1, e2) == CdComplex(L));
    for (int r = 0; r <= kMaxLevel; ++r) {
        CdVector v(AlgebraLevel(r), 3);
        double expected = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            v[j] = CdComplex::from_real(random_real(r));
            expected += cd_abs2(v[j].re);
        }
        const CdComplex ip = cdc_inner(v, v);
        CHECK(std::abs(ip.re[0] - expected) < 1e-12 * expected);
        CHECK(max_abs_diff(ip.re.pure(), CdReal(AlgebraLevel(r))) < 1e-12 * expected);
        CHECK(ip.im.is_zero());
    }
}

TEST_CASE("cdc_sqrt") {
    const AlgebraLevel L(3);
    CHECK(cdc_sqrt(CdComplex::from_real(CdReal::scalar(L, 4.0))) ==
          CdComplex::from_real(CdReal::scalar(L, 2.0)));
    try {
        (void)cdc_sqrt(CdComplex(e(3, 1), e(3, 2)));
        FAIL("expected an error");
    } catch (const CdError& err) {
        CHECK(err.code() == Errc::nilpotent_no_root);
    }
    for (int r = 0; r <= kMaxLevel; ++r) {
        double worst = 0.0;
        for (int k = 0; k < 500; ++k) {
            const CdComplex a = random_complex(r);
            const CdComplex s = cdc_sqrt(a);
            worst = std::max(worst, max_abs_diff(s * s, a) / std::sqrt(cdc_norm2(a)));
            CdReal ar = random_real(r);
            if (r == 0) ar[0] = std::abs(ar[0]);
            const CdComplex sr = cdc_sqrt(CdComplex::from_real(ar));
            CHECK(max_abs_diff(sr.re, cd_sqrt(ar)) < 1e-12 * 4 * std::sqrt(cd_abs2(ar)));
            CHECK(sr.im.is_zero());
        }
        CHECK(worst < 1e-10);
    }
    // central-only input falls back to the complex root
    const CdComplex c(CdReal::scalar(L, -1.0), CdReal(L));
    const CdComplex rc = cdc_sqrt(c);
    CHECK(max_abs_diff(rc * rc, c) < 1e-15);
    // z0 = 0 with v^2 != 0
    const CdComplex pure(e(3, 1) * 2.0, e(3, 3));
    const CdComplex rp = cdc_sqrt(pure);
    CHECK(max_abs_diff(rp * rp, pure) < 1e-12);
}

TEST_CASE("cd_exp") {
    CHECK(cd_exp(CdReal(AlgebraLevel(3))) == e(3, 0));
    CHECK(max_abs_diff(cd_exp(std::numbers::pi * e(3, 1)), -e(3, 0)) < 1e-15);
    for (int r = 0; r <= kMaxLevel; ++r) {
        const CdReal z = random_real(r);
        CHECK(max_abs_diff(cd_exp(z) * cd_exp(-z), e(r, 0)) < 1e-12);
    }
}

TEST_CASE("vec layout round trip") {
    const CdVector v = testutil::random_vector(3, 4);
    const Eigen::VectorXd x = to_vec(v);
    CHECK(x.size() == 64);
    CHECK(x[vec_index(AlgebraLevel(3), 2, 1, 5)] == v[2].im[5]);
    const CdVector back = from_vec(AlgebraLevel(3), x);
    for (std::size_t j = 0; j < 4; ++j) CHECK(back[j] == v[j]);
    CHECK(std::abs(vec_norm2(x) - cdc_norm2(v)) < 1e-12 * cdc_norm2(v));
}
