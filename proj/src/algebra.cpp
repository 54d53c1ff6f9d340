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
#include "cdstoch/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

namespace cdstoch {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::level_out_of_range: return "level_out_of_range";
        case Errc::level_mismatch: return "level_mismatch";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::non_finite: return "non_finite";
        case Errc::negative_real_no_canonical_root: return "negative_real_no_canonical_root";
        case Errc::nilpotent_no_root: return "nilpotent_no_root";
        case Errc::degenerate_branch: return "degenerate_branch";
        case Errc::not_spd: return "not_spd";
        case Errc::invalid_covariance: return "invalid_covariance";
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::non_convergence: return "non_convergence";
    }
    return "unknown";
}

CdError::CdError(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

AlgebraLevel::AlgebraLevel(int r) : r_(r) {
    if (r < 0 || r > kMaxLevel) {
        throw CdError(Errc::level_out_of_range, "level " + std::to_string(r) + " outside 0.." +
                                                    std::to_string(kMaxLevel));
    }
}

namespace {

void require_same_level(AlgebraLevel a, AlgebraLevel b) {
    if (a != b) {
        throw CdError(Errc::level_mismatch,
                      "levels " + std::to_string(a.r()) + " and " + std::to_string(b.r()));
    }
}

struct SignTables {
    // sign[r][p * kMaxDim + q]
    std::array<std::array<std::int8_t, kMaxDim * kMaxDim>, kMaxLevel + 1> sign{};
};

const SignTables& sign_tables() {
    static const SignTables tables = [] {
        SignTables t;
        for (int r = 0; r <= kMaxLevel; ++r) {
            const std::size_t d = std::size_t{1} << r;
            std::vector<double> a(d), b(d), out(d);
            for (std::size_t p = 0; p < d; ++p) {
                for (std::size_t q = 0; q < d; ++q) {
                    std::fill(a.begin(), a.end(), 0.0);
                    std::fill(b.begin(), b.end(), 0.0);
                    a[p] = 1.0;
                    b[q] = 1.0;
                    detail::doubling_product(a, b, out);
                    t.sign[r][p * kMaxDim + q] = static_cast<std::int8_t>(out[p ^ q]);
                }
            }
        }
        return t;
    }();
    return tables;
}

}  // namespace

namespace detail {

void doubling_product(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = a.size();
    if (n == 1) {
        out[0] = a[0] * b[0];
        return;
    }
    const std::size_t h = n / 2;
    const auto a1 = a.first(h), a2 = a.subspan(h);
    const auto c = b.first(h), d = b.subspan(h);

    std::array<double, kMaxDim / 2> conj_c{}, conj_d{}, t1{}, t2{};
    for (std::size_t k = 0; k < h; ++k) {
        conj_c[k] = k == 0 ? c[k] : -c[k];
        conj_d[k] = k == 0 ? d[k] : -d[k];
    }
    const std::span<double> s1(t1.data(), h), s2(t2.data(), h);
    // first half: a1 c - conj(d) a2
    doubling_product(a1, c, s1);
    doubling_product({conj_d.data(), h}, a2, s2);
    for (std::size_t k = 0; k < h; ++k) out[k] = s1[k] - s2[k];
    // second half: d a1 + a2 conj(c)
    doubling_product(d, a1, s1);
    doubling_product(a2, {conj_c.data(), h}, s2);
    for (std::size_t k = 0; k < h; ++k) out[h + k] = s1[k] + s2[k];
}

}  // namespace detail

int basis_sign(int r, std::size_t p, std::size_t q) {
    return sign_tables().sign.at(static_cast<std::size_t>(r))[p * kMaxDim + q];
}

// --- CdReal -------------------------------------------------------------------------------

CdReal::CdReal(AlgebraLevel level) : level_(level) {}

CdReal::CdReal(AlgebraLevel level, std::span<const double> coeffs) : level_(level) {
    if (coeffs.size() != level.dim()) {
        throw CdError(Errc::dimension_mismatch, "expected " + std::to_string(level.dim()) +
                                                    " coefficients, got " +
                                                    std::to_string(coeffs.size()));
    }
    std::copy(coeffs.begin(), coeffs.end(), c_.begin());
    if (!is_finite()) throw CdError(Errc::non_finite, "non-finite coefficient");
}

CdReal::CdReal(AlgebraLevel level, std::initializer_list<double> coeffs)
    : CdReal(level, std::span<const double>(coeffs.begin(), coeffs.size())) {}

CdReal CdReal::unit(AlgebraLevel level, std::size_t k) {
    if (k >= level.dim()) throw CdError(Errc::dimension_mismatch, "basis index out of range");
    CdReal z(level);
    z.c_[k] = 1.0;
    return z;
}

CdReal CdReal::scalar(AlgebraLevel level, double value) {
    CdReal z(level);
    z.c_[0] = value;
    return z;
}

CdReal CdReal::pure() const {
    CdReal z = *this;
    z.c_[0] = 0.0;
    return z;
}

bool CdReal::is_zero() const noexcept {
    return std::all_of(c_.begin(), c_.begin() + dim(), [](double v) { return v == 0.0; });
}

bool CdReal::is_finite() const noexcept {
    return std::all_of(c_.begin(), c_.begin() + dim(), [](double v) { return std::isfinite(v); });
}

CdReal& CdReal::operator+=(const CdReal& rhs) {
    require_same_level(level_, rhs.level_);
    for (std::size_t k = 0; k < dim(); ++k) c_[k] += rhs.c_[k];
    return *this;
}

CdReal& CdReal::operator-=(const CdReal& rhs) {
    require_same_level(level_, rhs.level_);
    for (std::size_t k = 0; k < dim(); ++k) c_[k] -= rhs.c_[k];
    return *this;
}

CdReal& CdReal::operator*=(double s) noexcept {
    for (std::size_t k = 0; k < dim(); ++k) c_[k] *= s;
    return *this;
}

bool operator==(const CdReal& a, const CdReal& b) {
    return a.level_ == b.level_ && std::equal(a.c_.begin(), a.c_.begin() + a.dim(), b.c_.begin());
}

CdReal cd_mul(const CdReal& a, const CdReal& b) {
    require_same_level(a.level(), b.level());
    const std::size_t d = a.dim();
    const auto& sign = sign_tables().sign[static_cast<std::size_t>(a.level().r())];
    CdReal out(a.level());
    for (std::size_t p = 0; p < d; ++p) {
        const double ap = a[p];
        if (ap == 0.0) continue;
        const std::int8_t* row = &sign[p * kMaxDim];
        for (std::size_t q = 0; q < d; ++q) {
            out[p ^ q] += row[q] * ap * b[q];
        }
    }
    return out;
}

CdReal cd_conj(const CdReal& z) {
    CdReal out = -z;
    out[0] = z[0];
    return out;
}

double cd_abs2(const CdReal& z) {
    double s = 0.0;
    for (double v : z.coeffs()) s += v * v;
    return s;
}

double cd_dot(const CdReal& a, const CdReal& b) {
    require_same_level(a.level(), b.level());
    double s = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k) s += a[k] * b[k];
    return s;
}

CdReal cd_sqrt(const CdReal& a) {
    const CdReal v = a.pure();
    const double rho = std::sqrt(cd_abs2(v));
    const double a0 = a.real();
    if (rho == 0.0) {
        if (a0 < 0.0) {
            throw CdError(Errc::negative_real_no_canonical_root,
                          "square root of a negative real has no canonical pure direction");
        }
        return CdReal::scalar(a.level(), std::sqrt(a0));
    }
    const std::complex<double> s = std::sqrt(std::complex<double>(a0, rho));
    CdReal out = v * (s.imag() / rho);
    out[0] = s.real();
    return out;
}

std::optional<std::pair<CdReal, CdReal>> find_zero_divisor_pair(AlgebraLevel level) {
    const std::size_t d = level.dim();
    for (std::size_t a = 1; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            const CdReal x = CdReal::unit(level, a) + CdReal::unit(level, b);
            for (std::size_t c = 1; c < d; ++c) {
                for (std::size_t e = c + 1; e < d; ++e) {
                    for (double s : {1.0, -1.0}) {
                        const CdReal y = CdReal::unit(level, c) + s * CdReal::unit(level, e);
                        if (cd_mul(x, y).is_zero()) return std::make_pair(x, y);
                    }
                }
            }
        }
    }
    return std::nullopt;
}

CdReal cd_exp(const CdReal& z) {
    const CdReal v = z.pure();
    const double rho = std::sqrt(cd_abs2(v));
    const double scale = std::exp(z.real());
    if (rho == 0.0) return CdReal::scalar(z.level(), scale);
    CdReal out = v * (scale * std::sin(rho) / rho);
    out[0] = scale * std::cos(rho);
    return out;
}

// --- CdComplex ----------------------------------------------------------------------------

CdComplex::CdComplex(CdReal re_part, CdReal im_part) : re(std::move(re_part)), im(std::move(im_part)) {
    require_same_level(re.level(), im.level());
}

CdComplex CdComplex::from_real(CdReal re_part) {
    CdReal zero(re_part.level());
    return {std::move(re_part), std::move(zero)};
}

CdComplex& CdComplex::operator+=(const CdComplex& rhs) {
    re += rhs.re;
    im += rhs.im;
    return *this;
}

CdComplex& CdComplex::operator-=(const CdComplex& rhs) {
    re -= rhs.re;
    im -= rhs.im;
    return *this;
}

CdComplex& CdComplex::operator*=(double s) noexcept {
    re *= s;
    im *= s;
    return *this;
}

CdComplex cdc_mul(const CdComplex& a, const CdComplex& b) {
    return {cd_mul(a.re, b.re) - cd_mul(a.im, b.im), cd_mul(a.re, b.im) + cd_mul(a.im, b.re)};
}

CdComplex cdc_conj(const CdComplex& a) { return {cd_conj(a.re), cd_conj(a.im)}; }

double cdc_norm2(const CdComplex& a) { return 2.0 * cd_abs2(a.re) + 2.0 * cd_abs2(a.im); }

CdComplex cdc_sqrt(const CdComplex& a) {
    using cplx = std::complex<double>;
    const AlgebraLevel level = a.level();
    const cplx z0(a.re.real(), a.im.real());
    const CdReal b = a.re.pure();
    const CdReal c = a.im.pure();
    const double vnorm2 = cd_abs2(b) + cd_abs2(c);

    if (vnorm2 == 0.0) {
        const cplx s = std::sqrt(z0);
        return {CdReal::scalar(level, s.real()), CdReal::scalar(level, s.imag())};
    }

    // (b + i c)^2 for pure b, c is central: -|b|^2 + |c|^2 - 2 i <b, c>.
    const cplx vsq(-cd_abs2(b) + cd_abs2(c), -2.0 * cd_dot(b, c));
    if (std::abs(vsq) <= 1e-14 * vnorm2 && std::abs(z0) <= 1e-14 * std::sqrt(vnorm2)) {
        throw CdError(Errc::nilpotent_no_root, "pure part squares to zero and central part vanishes");
    }

    // gamma^2 solves g^2 - z0 g + vsq/4 = 0. Prefer the (z0 + q)/2 root, q the principal root of
    // z0^2 - vsq; that branch reproduces the principal root on A_r inputs.
    const cplx q = std::sqrt(z0 * z0 - vsq);
    const cplx plus_raw = 0.5 * (z0 + q);
    const cplx minus_raw = 0.5 * (z0 - q);
    cplx g_plus, g_minus;
    if (std::abs(plus_raw) >= std::abs(minus_raw)) {
        g_plus = plus_raw;
        g_minus = plus_raw == cplx(0.0) ? minus_raw : vsq / (4.0 * plus_raw);
    } else {
        g_minus = minus_raw;
        g_plus = vsq / (4.0 * minus_raw);
    }
    const double scale = std::max(std::abs(g_plus), std::abs(g_minus));
    cplx g2 = g_plus;
    if (std::abs(g_plus) <= 1e-12 * scale) g2 = g_minus;
    if (scale == 0.0 || std::abs(g2) == 0.0) {
        throw CdError(Errc::degenerate_branch, "every candidate central root vanishes");
    }

    const cplx gamma = std::sqrt(g2);
    const cplx kappa = 1.0 / (2.0 * gamma);
    CdReal re = b * kappa.real() - c * kappa.imag();
    CdReal im = b * kappa.imag() + c * kappa.real();
    re[0] = gamma.real();
    im[0] = gamma.imag();
    return {std::move(re), std::move(im)};
}

// --- CdVector -----------------------------------------------------------------------------

CdVector::CdVector(AlgebraLevel level, std::size_t n) : level_(level), entries_(n, CdComplex(level)) {}

CdVector::CdVector(AlgebraLevel level, std::vector<CdComplex> entries)
    : level_(level), entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        require_same_level(level_, e.level());
        if (!e.re.is_finite() || !e.im.is_finite()) throw CdError(Errc::non_finite, "vector entry");
    }
}

CdVector CdVector::basis(AlgebraLevel level, std::size_t n, std::size_t k, const CdComplex& x) {
    CdVector v(level, n);
    v.entries_.at(k) = x;
    return v;
}

CdVector& CdVector::operator+=(const CdVector& rhs) {
    if (rhs.size() != size()) throw CdError(Errc::dimension_mismatch, "vector lengths differ");
    for (std::size_t k = 0; k < size(); ++k) entries_[k] += rhs.entries_[k];
    return *this;
}

CdVector& CdVector::operator-=(const CdVector& rhs) {
    if (rhs.size() != size()) throw CdError(Errc::dimension_mismatch, "vector lengths differ");
    for (std::size_t k = 0; k < size(); ++k) entries_[k] -= rhs.entries_[k];
    return *this;
}

CdVector& CdVector::operator*=(double s) noexcept {
    for (auto& e : entries_) e *= s;
    return *this;
}

CdVector CdVector::times(const CdComplex& b) const {
    CdVector out = *this;
    for (auto& e : out.entries_) e = cdc_mul(e, b);
    return out;
}

double cdc_norm2(const CdVector& z) {
    double s = 0.0;
    for (const auto& e : z.entries()) s += cdc_norm2(e);
    return s;
}

CdComplex cdc_inner(const CdVector& x, const CdVector& y) {
    require_same_level(x.level(), y.level());
    if (x.size() != y.size()) throw CdError(Errc::dimension_mismatch, "inner product lengths differ");
    CdComplex acc(x.level());
    for (std::size_t j = 0; j < x.size(); ++j) acc += cdc_mul(x[j], cdc_conj(y[j]));
    return acc;
}

Eigen::VectorXd to_vec(const CdVector& x) {
    const AlgebraLevel level = x.level();
    Eigen::VectorXd v(real_dim(level, x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) {
        for (std::size_t l = 0; l < level.dim(); ++l) {
            v[vec_index(level, j, 0, l)] = x[j].re[l];
            v[vec_index(level, j, 1, l)] = x[j].im[l];
        }
    }
    return v;
}

CdVector from_vec(AlgebraLevel level, const Eigen::Ref<const Eigen::VectorXd>& v) {
    const std::size_t stride = 2 * level.dim();
    if (v.size() % static_cast<Eigen::Index>(stride) != 0) {
        throw CdError(Errc::dimension_mismatch, "real coordinate count not a multiple of 2^{r+1}");
    }
    const std::size_t n = static_cast<std::size_t>(v.size()) / stride;
    CdVector x(level, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < level.dim(); ++l) {
            x[j].re[l] = v[vec_index(level, j, 0, l)];
            x[j].im[l] = v[vec_index(level, j, 1, l)];
        }
    }
    return x;
}

// --- RealFunctional -----------------------------------------------------------------------

RealFunctional::RealFunctional(AlgebraLevel level, std::size_t n, Eigen::VectorXd coeffs)
    : level_(level), n_(n), coeffs_(std::move(coeffs)) {
    if (static_cast<std::size_t>(coeffs_.size()) != real_dim(level, n)) {
        throw CdError(Errc::dimension_mismatch, "functional length must be 2^{r+1} n");
    }
    if (!coeffs_.allFinite()) throw CdError(Errc::non_finite, "functional coefficient");
}

RealFunctional RealFunctional::zero(AlgebraLevel level, std::size_t n) {
    return {level, n, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(real_dim(level, n)))};
}

RealFunctional RealFunctional::coordinate(AlgebraLevel level, std::size_t n, std::size_t index, double scale) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(real_dim(level, n)));
    c[static_cast<Eigen::Index>(index)] = scale;
    return {level, n, std::move(c)};
}

double RealFunctional::operator()(const CdVector& x) const {
    if (x.size() != n_ || x.level() != level_) throw CdError(Errc::dimension_mismatch, "functional argument");
    return coeffs_.dot(to_vec(x));
}

}  // namespace cdstoch
