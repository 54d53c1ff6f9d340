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
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cdstoch/algebra.hpp"

namespace cdstoch {

/// Dense h x n matrix with A_r entries.
class CdMatrix {
  public:
    CdMatrix(AlgebraLevel level, std::size_t rows, std::size_t cols);

    static CdMatrix identity(AlgebraLevel level, std::size_t n);
    /// Real matrix embedded along i_0.
    static CdMatrix from_real(AlgebraLevel level, const Eigen::Ref<const Eigen::MatrixXd>& m);

    [[nodiscard]] AlgebraLevel level() const noexcept { return level_; }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] const CdReal& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    [[nodiscard]] CdReal& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    /// Entrywise conjugate transpose.
    [[nodiscard]] CdMatrix conj_transpose() const;
    /// Sum of |entry|^2.
    [[nodiscard]] double frobenius2() const;
    [[nodiscard]] bool is_zero() const;

    friend CdMatrix operator*(const CdMatrix& a, const CdMatrix& b);
    friend CdMatrix operator*(double s, CdMatrix a);
    friend CdMatrix operator+(CdMatrix a, const CdMatrix& b);
    friend CdMatrix operator-(CdMatrix a);
    friend bool operator==(const CdMatrix& a, const CdMatrix& b);

  private:
    AlgebraLevel level_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<CdReal> data_;
};

/// Real-matrix form of an operator A_{r,C}^n -> A_{r,C}^h acting on vec coordinates.
struct RealizedOp {
    AlgebraLevel level;
    std::size_t out_n;
    std::size_t in_n;
    Eigen::MatrixXd m;

    RealizedOp(AlgebraLevel lvl, std::size_t out, std::size_t in, Eigen::MatrixXd mat);
    static RealizedOp identity(AlgebraLevel level, std::size_t n);
};

/// Right-linear operator S(x + i y) = S00 x + S01 y + i (S10 x + S11 y), x, y in A_r^n; each
/// block acts entrywise by left multiplication. Immutable; the realized matrix is computed on
/// first use and shared between copies.
class RightLinearOp {
  public:
    /// blocks[l][k] = S_{l,k}.
    RightLinearOp(CdMatrix s00, CdMatrix s01, CdMatrix s10, CdMatrix s11);

    static RightLinearOp identity(AlgebraLevel level, std::size_t n);
    static RightLinearOp zero(AlgebraLevel level, std::size_t h, std::size_t n);
    /// Left multiplication by a on every component (diagonal n x n).
    static RightLinearOp left_mult(AlgebraLevel level, std::size_t n, const CdReal& a);
    /// A + i B with A, B in L_{r,i}: S00 = S11 = A, S10 = B, S01 = -B.
    static RightLinearOp from_parts(const CdMatrix& a, const CdMatrix& b);

    [[nodiscard]] AlgebraLevel level() const noexcept { return blocks_[0].level(); }
    [[nodiscard]] std::size_t rows() const noexcept { return blocks_[0].rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return blocks_[0].cols(); }
    [[nodiscard]] const CdMatrix& block(int l, int k) const { return blocks_.at(static_cast<std::size_t>(2 * l + k)); }

    [[nodiscard]] const RealizedOp& realized() const;
    [[nodiscard]] RightLinearOp scaled(double c) const;

  private:
    std::array<CdMatrix, 4> blocks_;
    struct Cache {
        std::once_flag once;
        std::optional<RealizedOp> value;
    };
    std::shared_ptr<Cache> cache_;
};

/// Real 2^r x 2^r matrix of x -> a x on A_r coefficients.
Eigen::MatrixXd left_mult_matrix(const CdReal& a);

CdVector op_apply(const RightLinearOp& op, const CdVector& x);
RealizedOp op_realize(const RightLinearOp& op);
CdVector op_apply(const RealizedOp& op, const CdVector& x);
RealizedOp op_compose(const RealizedOp& a, const RealizedOp& b);

/// Conjugate-transpose adjoint: T00 = S00^H, T01 = -S10^H, T10 = -S01^H, T11 = S11^H. On
/// operators of the form A + iB this is A^H + i B^H, i.e. (J*)_{k,l} = conj(J_{l,k}).
RightLinearOp op_adjoint(const RightLinearOp& op);

/// i_0 coefficient of the real part of <x, y>; the real inner product the adjoint preserves.
double real_inner(const CdVector& x, const CdVector& y);

/// Tr(A A*) = sum |A_{l,k}|^2 for an A_r-entried block.
double op_trace_aa_star(const CdMatrix& a);
/// Tr(A A*) evaluated as sum_l <A A* e_l, e_l> by applying A* and then A to basis vectors.
double op_trace_aa_star_by_basis(const CdMatrix& a);
/// Tr(A A*) evaluated as sum_{l,k} |<e_l, A e_k>|^2.
double op_trace_aa_star_by_entries(const CdMatrix& a);

/// ||S||_2^2 as the sum of Tr(S_{lk} S_{lk}^*) over the four blocks. For S = A + iB this equals
/// 2 Tr(AA*) + 2 Tr(BB*).
double hs_norm2(const RightLinearOp& op);
/// Same quantity computed from the realized matrix: squared Euclidean norms of the columns
/// driven by i_0-directed real and i-part inputs.
double hs_norm2(const RealizedOp& op);

/// Operator norm by power iteration on M^T M; throws Errc::non_convergence after max_iter.
double op_norm(const RealizedOp& op, double tol = 1e-10, int max_iter = 10000);
inline double op_norm(const RightLinearOp& op, double tol = 1e-10, int max_iter = 10000) {
    return op_norm(op.realized(), tol, max_iter);
}

/// Symmetric positive definite square root by eigendecomposition.
Eigen::MatrixXd spd_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Block-diagonal covariance U = (+)_j a_j B_j.
class CovarianceOperator {
  public:
    struct Block {
        CdReal a;
        Eigen::MatrixXd b;
    };

    /// Validates every block; errors are Errc::invalid_covariance and name the 1-based block.
    explicit CovarianceOperator(std::vector<Block> blocks);

    /// Single block a = i_0, B = I_n.
    static CovarianceOperator identity(AlgebraLevel level, std::size_t n);

    [[nodiscard]] AlgebraLevel level() const noexcept { return blocks_.front().a.level(); }
    [[nodiscard]] std::size_t dim() const noexcept { return boundaries_.back(); }
    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    /// beta_0 = 0 < beta_1 < ... < beta_m = n.
    [[nodiscard]] const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }
    /// 0-based block index containing 0-based coordinate k.
    [[nodiscard]] std::size_t block_of(std::size_t k) const;

    /// U as an A_r-entried operator (S00 = S11).
    [[nodiscard]] RightLinearOp as_operator() const;

  private:
    std::vector<Block> blocks_;
    std::vector<std::size_t> boundaries_;
};

/// U^{1/2} = (+)_j a_j^{1/2} B_j^{1/2}.
RightLinearOp cov_sqrt(const CovarianceOperator& u);
/// (U^{1/2})* = (+)_j conj(a_j^{1/2}) B_j^{1/2}.
RightLinearOp cov_sqrt_adjoint(const CovarianceOperator& u);

/// U = U0 + i U1; U1 absent means the driver has no i-part (A_r-valued noise).
class ComplexCovariance {
  public:
    explicit ComplexCovariance(CovarianceOperator u0, std::optional<CovarianceOperator> u1 = std::nullopt);

    [[nodiscard]] AlgebraLevel level() const noexcept { return u0_.level(); }
    [[nodiscard]] std::size_t dim() const noexcept { return u0_.dim(); }
    [[nodiscard]] const CovarianceOperator& u0() const noexcept { return u0_; }
    [[nodiscard]] const std::optional<CovarianceOperator>& u1() const noexcept { return u1_; }
    /// Number of real Wiener coordinates driving w: n, or 2n with an i-part.
    [[nodiscard]] std::size_t noise_dim() const noexcept { return u1_ ? 2 * dim() : dim(); }
    /// vec(w) = R xi + p t, xi = (xi0, xi1) real; shape (2^{r+1} n) x noise_dim().
    [[nodiscard]] const Eigen::MatrixXd& injection() const noexcept { return injection_; }
    /// max(||U0^{1/2}||_2^2, ||U1^{1/2}||_2^2).
    [[nodiscard]] double max_sqrt_hs2() const noexcept { return max_sqrt_hs2_; }

  private:
    CovarianceOperator u0_;
    std::optional<CovarianceOperator> u1_;
    Eigen::MatrixXd injection_;
    double max_sqrt_hs2_ = 0.0;
};

/// exp of the realized matrix by scaling and squaring with a truncated Taylor series.
RealizedOp op_exp_left(const RealizedOp& g, double t, double tol = 1e-14);
inline RealizedOp op_exp_left(const RightLinearOp& g, double t, double tol = 1e-14) {
    return op_exp_left(g.realized(), t, tol);
}

/// F(S; U0, U1) = sum_{l,k} Tr({S_{lk} U_k^{1/2}}{(U_k^{1/2})* S_{lk}*}), from the blocks.
double f_functional(const RightLinearOp& s, const ComplexCovariance& u);
/// Same functional from the realized matrix: ||M R||_F^2 with R the noise injection.
double f_functional(const RealizedOp& s, const ComplexCovariance& u);

}  // namespace cdstoch
