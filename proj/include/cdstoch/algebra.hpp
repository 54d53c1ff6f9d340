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
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cdstoch {

/// Largest supported doubling level (dimension 32).
inline constexpr int kMaxLevel = 5;
inline constexpr std::size_t kMaxDim = std::size_t{1} << kMaxLevel;

enum class Errc {
    level_out_of_range,
    level_mismatch,
    dimension_mismatch,
    non_finite,
    negative_real_no_canonical_root,
    nilpotent_no_root,
    degenerate_branch,
    not_spd,
    invalid_covariance,
    invalid_argument,
    non_convergence,
};

const char* to_string(Errc code) noexcept;

/// Error raised by the algebra and operator layers. Carries a machine-readable code.
class CdError : public std::runtime_error {
  public:
    CdError(Errc code, const std::string& what);
    [[nodiscard]] Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

/// Doubling level r of the algebra A_r; dim() == 2^r.
class AlgebraLevel {
  public:
    explicit AlgebraLevel(int r);

    [[nodiscard]] int r() const noexcept { return r_; }
    [[nodiscard]] std::size_t dim() const noexcept { return std::size_t{1} << r_; }

    friend bool operator==(AlgebraLevel, AlgebraLevel) = default;

  private:
    int r_;
};

/// Element of the real Cayley-Dickson algebra A_r over the standard basis i_0..i_{2^r-1}.
///
/// Storage is dense and fixed-size; only the first dim() coefficients are meaningful and the
/// remainder stay zero.
class CdReal {
  public:
    explicit CdReal(AlgebraLevel level);
    CdReal(AlgebraLevel level, std::span<const double> coeffs);
    CdReal(AlgebraLevel level, std::initializer_list<double> coeffs);

    /// Basis unit i_k.
    static CdReal unit(AlgebraLevel level, std::size_t k);
    /// Real multiple of the identity i_0.
    static CdReal scalar(AlgebraLevel level, double value);

    [[nodiscard]] AlgebraLevel level() const noexcept { return level_; }
    [[nodiscard]] std::size_t dim() const noexcept { return level_.dim(); }
    [[nodiscard]] double operator[](std::size_t k) const { return c_[k]; }
    [[nodiscard]] double& operator[](std::size_t k) { return c_[k]; }
    [[nodiscard]] std::span<const double> coeffs() const noexcept { return {c_.data(), dim()}; }
    [[nodiscard]] std::span<double> coeffs() noexcept { return {c_.data(), dim()}; }

    /// i_0 coefficient.
    [[nodiscard]] double real() const noexcept { return c_[0]; }
    /// Element with the i_0 coefficient removed.
    [[nodiscard]] CdReal pure() const;
    [[nodiscard]] bool is_zero() const noexcept;
    [[nodiscard]] bool is_finite() const noexcept;

    CdReal& operator+=(const CdReal& rhs);
    CdReal& operator-=(const CdReal& rhs);
    CdReal& operator*=(double s) noexcept;

    friend CdReal operator+(CdReal a, const CdReal& b) { return a += b; }
    friend CdReal operator-(CdReal a, const CdReal& b) { return a -= b; }
    friend CdReal operator-(CdReal a) { return a *= -1.0; }
    friend CdReal operator*(CdReal a, double s) { return a *= s; }
    friend CdReal operator*(double s, CdReal a) { return a *= s; }
    friend bool operator==(const CdReal& a, const CdReal& b);

  private:
    AlgebraLevel level_;
    std::array<double, kMaxDim> c_{};
};

/// Cayley-Dickson product under the doubling rule
///     (a, b)(c, d) = (ac - conj(d) b, d a + b conj(c)).
/// Basis products are tabulated once per level: i_p i_q = sign(p, q) i_{p xor q}.
CdReal cd_mul(const CdReal& a, const CdReal& b);
inline CdReal operator*(const CdReal& a, const CdReal& b) { return cd_mul(a, b); }

/// Sign of i_p i_q at level r (the product is always +-i_{p xor q}).
int basis_sign(int r, std::size_t p, std::size_t q);

namespace detail {
/// Direct recursive evaluation of the doubling rule; independent of the sign table.
void doubling_product(std::span<const double> a, std::span<const double> b, std::span<double> out);
}  // namespace detail

CdReal cd_conj(const CdReal& z);
/// Sum of squared coefficients, |z|^2 = z conj(z).
double cd_abs2(const CdReal& z);
/// Euclidean inner product of coefficient vectors, Re(a conj(b)).
double cd_dot(const CdReal& a, const CdReal& b);

/// Square root computed in the commutative plane spanned by i_0 and the pure direction of a.
/// Positive reals map to positive reals; zero maps to zero. Throws CdError with
/// Errc::negative_real_no_canonical_root for negative real multiples of i_0.
CdReal cd_sqrt(const CdReal& a);

/// Searches pairs x = i_a + i_b, y = i_c +- i_d (a < b, c < d, all nonzero) for xy == 0.
/// Returns the first hit in lexicographic order, or nothing (always nothing for r <= 3).
std::optional<std::pair<CdReal, CdReal>> find_zero_divisor_pair(AlgebraLevel level);

/// exp(z) = e^{z_0} (cos|z'| + z'/|z'| sin|z'|).
CdReal cd_exp(const CdReal& z);

/// Element b + i c of the complexified algebra A_{r,C}; the imaginary unit i is central.
struct CdComplex {
    CdReal re;
    CdReal im;

    explicit CdComplex(AlgebraLevel level) : re(level), im(level) {}
    CdComplex(CdReal re_part, CdReal im_part);
    /// Embeds an A_r element with zero i-part.
    static CdComplex from_real(CdReal re_part);

    [[nodiscard]] AlgebraLevel level() const noexcept { return re.level(); }

    CdComplex& operator+=(const CdComplex& rhs);
    CdComplex& operator-=(const CdComplex& rhs);
    CdComplex& operator*=(double s) noexcept;

    friend CdComplex operator+(CdComplex a, const CdComplex& b) { return a += b; }
    friend CdComplex operator-(CdComplex a, const CdComplex& b) { return a -= b; }
    friend CdComplex operator*(CdComplex a, double s) { return a *= s; }
    friend CdComplex operator*(double s, CdComplex a) { return a *= s; }
    friend bool operator==(const CdComplex&, const CdComplex&) = default;
};

/// (b + i c)(d + i e) = (bd - ce) + i(be + cd).
CdComplex cdc_mul(const CdComplex& a, const CdComplex& b);
inline CdComplex operator*(const CdComplex& a, const CdComplex& b) { return cdc_mul(a, b); }

/// conj(b + i c) = conj(b) + i conj(c); i itself is not conjugated.
CdComplex cdc_conj(const CdComplex& a);

/// ||a||^2 = 2|b|^2 + 2|c|^2. Note ||1||^2 == 2 under this convention.
double cdc_norm2(const CdComplex& a);

/// Square root in A_{r,C}. Writing a = z0 + v with z0 central and v pure, v^2 is central and
/// the root is gamma + v/(2 gamma) with gamma^4 - z0 gamma^2 + v^2/4 = 0. The branch agrees with
/// cd_sqrt on A_r inputs.
CdComplex cdc_sqrt(const CdComplex& a);

/// Vector in A_{r,C}^n.
class CdVector {
  public:
    CdVector(AlgebraLevel level, std::size_t n);
    CdVector(AlgebraLevel level, std::vector<CdComplex> entries);

    /// x_k in component k (zero elsewhere).
    static CdVector basis(AlgebraLevel level, std::size_t n, std::size_t k, const CdComplex& x);

    [[nodiscard]] AlgebraLevel level() const noexcept { return level_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const CdComplex& operator[](std::size_t k) const { return entries_[k]; }
    [[nodiscard]] CdComplex& operator[](std::size_t k) { return entries_[k]; }
    [[nodiscard]] const std::vector<CdComplex>& entries() const noexcept { return entries_; }

    CdVector& operator+=(const CdVector& rhs);
    CdVector& operator-=(const CdVector& rhs);
    CdVector& operator*=(double s) noexcept;
    friend CdVector operator+(CdVector a, const CdVector& b) { return a += b; }
    friend CdVector operator-(CdVector a, const CdVector& b) { return a -= b; }
    friend CdVector operator*(CdVector a, double s) { return a *= s; }

    /// Right multiplication of every entry by b.
    [[nodiscard]] CdVector times(const CdComplex& b) const;

  private:
    AlgebraLevel level_;
    std::vector<CdComplex> entries_;
};

/// ||z||^2 = sum_j ||z_j||^2.
double cdc_norm2(const CdVector& z);

/// <x, y> = sum_j x_j conj(y_j).
CdComplex cdc_inner(const CdVector& x, const CdVector& y);

// Real coordinate layout ("vec"): component-major; within a component the 2^r coefficients of
// the real part come first, then the 2^r coefficients of the i-part. So coordinate
// j * 2^{r+1} + part * 2^r + l holds coefficient l of part (0 = re, 1 = im) of entry j.

/// Number of real coordinates of A_{r,C}^n.
inline std::size_t real_dim(AlgebraLevel level, std::size_t n) { return 2 * level.dim() * n; }
inline std::size_t vec_index(AlgebraLevel level, std::size_t component, int part, std::size_t basis) {
    return component * 2 * level.dim() + static_cast<std::size_t>(part) * level.dim() + basis;
}

Eigen::VectorXd to_vec(const CdVector& x);
CdVector from_vec(AlgebraLevel level, const Eigen::Ref<const Eigen::VectorXd>& v);

/// ||x||^2 computed from real coordinates: twice the Euclidean norm squared.
inline double vec_norm2(const Eigen::Ref<const Eigen::VectorXd>& v) { return 2.0 * v.squaredNorm(); }

/// Real-linear functional y(x) = <coeffs, vec(x)> on A_{r,C}^n.
class RealFunctional {
  public:
    RealFunctional(AlgebraLevel level, std::size_t n, Eigen::VectorXd coeffs);
    static RealFunctional zero(AlgebraLevel level, std::size_t n);
    /// Picks a single real coordinate.
    static RealFunctional coordinate(AlgebraLevel level, std::size_t n, std::size_t index, double scale = 1.0);

    [[nodiscard]] double operator()(const CdVector& x) const;
    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::VectorXd>& vec) const {
        return coeffs_.dot(vec);
    }
    [[nodiscard]] const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] AlgebraLevel level() const noexcept { return level_; }
    [[nodiscard]] std::size_t components() const noexcept { return n_; }

  private:
    AlgebraLevel level_;
    std::size_t n_;
    Eigen::VectorXd coeffs_;
};

}  // namespace cdstoch
