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
#include "cdstoch/linops.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace cdstoch {

namespace {

void require(bool ok, Errc code, const std::string& what) {
    if (!ok) throw CdError(code, what);
}

}  // namespace

// --- CdMatrix -----------------------------------------------------------------------------

CdMatrix::CdMatrix(AlgebraLevel level, std::size_t rows, std::size_t cols)
    : level_(level), rows_(rows), cols_(cols), data_(rows * cols, CdReal(level)) {}

CdMatrix CdMatrix::identity(AlgebraLevel level, std::size_t n) {
    CdMatrix m(level, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = CdReal::scalar(level, 1.0);
    return m;
}

CdMatrix CdMatrix::from_real(AlgebraLevel level, const Eigen::Ref<const Eigen::MatrixXd>& m) {
    CdMatrix out(level, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = CdReal::scalar(level, m(i, j));
        }
    }
    return out;
}

CdMatrix CdMatrix::conj_transpose() const {
    CdMatrix out(level_, cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = cd_conj((*this)(i, j));
    }
    return out;
}

double CdMatrix::frobenius2() const {
    double s = 0.0;
    for (const auto& z : data_) s += cd_abs2(z);
    return s;
}

bool CdMatrix::is_zero() const {
    for (const auto& z : data_) {
        if (!z.is_zero()) return false;
    }
    return true;
}

CdMatrix operator*(const CdMatrix& a, const CdMatrix& b) {
    require(a.level() == b.level(), Errc::level_mismatch, "matrix product");
    require(a.cols() == b.rows(), Errc::dimension_mismatch, "matrix product inner dimension");
    CdMatrix out(a.level(), a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            for (std::size_t c = 0; c < a.cols(); ++c) out(i, j) += cd_mul(a(i, c), b(c, j));
        }
    }
    return out;
}

CdMatrix operator*(double s, CdMatrix a) {
    for (auto& z : a.data_) z *= s;
    return a;
}

CdMatrix operator+(CdMatrix a, const CdMatrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), Errc::dimension_mismatch, "matrix sum");
    for (std::size_t k = 0; k < a.data_.size(); ++k) a.data_[k] += b.data_[k];
    return a;
}

CdMatrix operator-(CdMatrix a) { return -1.0 * std::move(a); }

bool operator==(const CdMatrix& a, const CdMatrix& b) {
    return a.level_ == b.level_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

// --- RealizedOp ---------------------------------------------------------------------------

RealizedOp::RealizedOp(AlgebraLevel lvl, std::size_t out, std::size_t in, Eigen::MatrixXd mat)
    : level(lvl), out_n(out), in_n(in), m(std::move(mat)) {
    require(static_cast<std::size_t>(m.rows()) == real_dim(level, out_n) &&
                static_cast<std::size_t>(m.cols()) == real_dim(level, in_n),
            Errc::dimension_mismatch, "realized matrix shape");
}

RealizedOp RealizedOp::identity(AlgebraLevel level, std::size_t n) {
    const auto d = static_cast<Eigen::Index>(real_dim(level, n));
    return {level, n, n, Eigen::MatrixXd::Identity(d, d)};
}

// --- RightLinearOp ------------------------------------------------------------------------

RightLinearOp::RightLinearOp(CdMatrix s00, CdMatrix s01, CdMatrix s10, CdMatrix s11)
    : blocks_{std::move(s00), std::move(s01), std::move(s10), std::move(s11)},
      cache_(std::make_shared<Cache>()) {
    for (const auto& b : blocks_) {
        require(b.level() == blocks_[0].level(), Errc::level_mismatch, "operator blocks");
        require(b.rows() == blocks_[0].rows() && b.cols() == blocks_[0].cols(), Errc::dimension_mismatch,
                "operator blocks must share one shape");
    }
}

RightLinearOp RightLinearOp::identity(AlgebraLevel level, std::size_t n) {
    return {CdMatrix::identity(level, n), CdMatrix(level, n, n), CdMatrix(level, n, n), CdMatrix::identity(level, n)};
}

RightLinearOp RightLinearOp::zero(AlgebraLevel level, std::size_t h, std::size_t n) {
    return {CdMatrix(level, h, n), CdMatrix(level, h, n), CdMatrix(level, h, n), CdMatrix(level, h, n)};
}

RightLinearOp RightLinearOp::left_mult(AlgebraLevel level, std::size_t n, const CdReal& a) {
    CdMatrix d(level, n, n);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = a;
    return {d, CdMatrix(level, n, n), CdMatrix(level, n, n), d};
}

RightLinearOp RightLinearOp::from_parts(const CdMatrix& a, const CdMatrix& b) {
    return {a, -b, b, a};
}

const RealizedOp& RightLinearOp::realized() const {
    std::call_once(cache_->once, [this] { cache_->value.emplace(op_realize(*this)); });
    return *cache_->value;
}

RightLinearOp RightLinearOp::scaled(double c) const {
    return {c * blocks_[0], c * blocks_[1], c * blocks_[2], c * blocks_[3]};
}

Eigen::MatrixXd left_mult_matrix(const CdReal& a) {
    const std::size_t d = a.dim();
    const int r = a.level().r();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t p = 0; p < d; ++p) {
        if (a[p] == 0.0) continue;
        for (std::size_t q = 0; q < d; ++q) {
            m(static_cast<Eigen::Index>(p ^ q), static_cast<Eigen::Index>(q)) += basis_sign(r, p, q) * a[p];
        }
    }
    return m;
}

CdVector op_apply(const RightLinearOp& op, const CdVector& x) {
    require(x.level() == op.level(), Errc::level_mismatch, "operator argument");
    require(x.size() == op.cols(), Errc::dimension_mismatch, "operator argument length");
    CdVector y(op.level(), op.rows());
    for (int l = 0; l < 2; ++l) {
        for (int k = 0; k < 2; ++k) {
            const CdMatrix& b = op.block(l, k);
            for (std::size_t i = 0; i < op.rows(); ++i) {
                CdReal& target = l == 0 ? y[i].re : y[i].im;
                for (std::size_t j = 0; j < op.cols(); ++j) {
                    target += cd_mul(b(i, j), k == 0 ? x[j].re : x[j].im);
                }
            }
        }
    }
    return y;
}

RealizedOp op_realize(const RightLinearOp& op) {
    const AlgebraLevel level = op.level();
    const auto d = static_cast<Eigen::Index>(level.dim());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(real_dim(level, op.rows())),
                                              static_cast<Eigen::Index>(real_dim(level, op.cols())));
    for (int l = 0; l < 2; ++l) {
        for (int k = 0; k < 2; ++k) {
            const CdMatrix& b = op.block(l, k);
            for (std::size_t i = 0; i < op.rows(); ++i) {
                for (std::size_t j = 0; j < op.cols(); ++j) {
                    if (b(i, j).is_zero()) continue;
                    const auto row = static_cast<Eigen::Index>(vec_index(level, i, l, 0));
                    const auto col = static_cast<Eigen::Index>(vec_index(level, j, k, 0));
                    m.block(row, col, d, d) = left_mult_matrix(b(i, j));
                }
            }
        }
    }
    return {level, op.rows(), op.cols(), std::move(m)};
}

CdVector op_apply(const RealizedOp& op, const CdVector& x) {
    require(x.level() == op.level, Errc::level_mismatch, "operator argument");
    require(x.size() == op.in_n, Errc::dimension_mismatch, "operator argument length");
    return from_vec(op.level, op.m * to_vec(x));
}

RealizedOp op_compose(const RealizedOp& a, const RealizedOp& b) {
    require(a.level == b.level, Errc::level_mismatch, "composition");
    require(a.in_n == b.out_n, Errc::dimension_mismatch, "composition inner dimension");
    return {a.level, a.out_n, b.in_n, a.m * b.m};
}

RightLinearOp op_adjoint(const RightLinearOp& op) {
    return {op.block(0, 0).conj_transpose(), -op.block(1, 0).conj_transpose(), -op.block(0, 1).conj_transpose(),
            op.block(1, 1).conj_transpose()};
}

double real_inner(const CdVector& x, const CdVector& y) {
    require(x.level() == y.level(), Errc::level_mismatch, "inner product");
    require(x.size() == y.size(), Errc::dimension_mismatch, "inner product lengths differ");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += cd_dot(x[j].re, y[j].re) - cd_dot(x[j].im, y[j].im);
    return s;
}

double op_trace_aa_star(const CdMatrix& a) { return a.frobenius2(); }

double op_trace_aa_star_by_basis(const CdMatrix& a) {
    const AlgebraLevel level = a.level();
    const CdMatrix zero_h(level, a.rows(), a.cols());
    const CdMatrix zero_n(level, a.cols(), a.rows());
    const RightLinearOp op(a, zero_h, zero_h, a);
    const RightLinearOp adj(a.conj_transpose(), zero_n, zero_n, a.conj_transpose());
    double s = 0.0;
    for (std::size_t l = 0; l < a.rows(); ++l) {
        const CdVector el = CdVector::basis(level, a.rows(), l, CdComplex::from_real(CdReal::scalar(level, 1.0)));
        const CdVector v = op_apply(op, op_apply(adj, el));
        s += cdc_inner(v, el).re.real();
    }
    return s;
}

double op_trace_aa_star_by_entries(const CdMatrix& a) {
    const AlgebraLevel level = a.level();
    const CdMatrix zero_h(level, a.rows(), a.cols());
    const RightLinearOp op(a, zero_h, zero_h, a);
    const CdComplex one = CdComplex::from_real(CdReal::scalar(level, 1.0));
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const CdVector aek = op_apply(op, CdVector::basis(level, a.cols(), k, one));
        for (std::size_t l = 0; l < a.rows(); ++l) {
            const CdComplex ip = cdc_inner(CdVector::basis(level, a.rows(), l, one), aek);
            s += cd_abs2(ip.re) + cd_abs2(ip.im);
        }
    }
    return s;
}

double hs_norm2(const RightLinearOp& op) {
    double s = 0.0;
    for (int l = 0; l < 2; ++l) {
        for (int k = 0; k < 2; ++k) s += op_trace_aa_star(op.block(l, k));
    }
    return s;
}

double hs_norm2(const RealizedOp& op) {
    double s = 0.0;
    for (std::size_t j = 0; j < op.in_n; ++j) {
        for (int part = 0; part < 2; ++part) {
            s += op.m.col(static_cast<Eigen::Index>(vec_index(op.level, j, part, 0))).squaredNorm();
        }
    }
    return s;
}

double op_norm(const RealizedOp& op, double tol, int max_iter) {
    require(tol > 0.0, Errc::invalid_argument, "op_norm tolerance must be positive");
    const Eigen::MatrixXd& m = op.m;
    if (m.size() == 0 || m.isZero(0.0)) return 0.0;
    Eigen::VectorXd v(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 2.399963 * static_cast<double>(i));
    v.normalize();
    double lambda = 0.0;
    double change = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = m.transpose() * (m * v);
        const double next = v.dot(w);
        const double wn = w.norm();
        if (wn == 0.0) return 0.0;
        v = w / wn;
        change = std::abs(next - lambda);
        if (it > 0 && change <= tol * next) return std::sqrt(next);
        lambda = next;
    }
    throw CdError(Errc::non_convergence, "power iteration did not converge; last relative change " +
                                              std::to_string(change / lambda));
}

Eigen::MatrixXd spd_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& b) {
    require(b.rows() == b.cols() && b.rows() > 0, Errc::not_spd, "matrix must be square and non-empty");
    require(b.allFinite(), Errc::not_spd, "non-finite entry");
    const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-12, Errc::not_spd, "not symmetric (max |B - B^T| = " + std::to_string(asym) + ")");
    const Eigen::MatrixXd sym = 0.5 * (b + b.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double scale = lam.cwiseAbs().maxCoeff();
    require(lam.minCoeff() > 1e-12 * scale, Errc::not_spd,
            "eigenvalue " + std::to_string(lam.minCoeff()) + " below threshold");
    const Eigen::MatrixXd& q = eig.eigenvectors();
    const Eigen::MatrixXd root = q * lam.cwiseSqrt().asDiagonal() * q.transpose();
    return 0.5 * (root + root.transpose());
}

// --- covariance ---------------------------------------------------------------------------

CovarianceOperator::CovarianceOperator(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    require(!blocks_.empty(), Errc::invalid_covariance, "at least one block required");
    boundaries_.push_back(0);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        const std::string tag = "block " + std::to_string(j + 1) + ": ";
        const Block& blk = blocks_[j];
        require(blk.a.level() == blocks_[0].a.level(), Errc::invalid_covariance, tag + "level differs from block 1");
        require(blk.a.is_finite(), Errc::invalid_covariance, tag + "non-finite scalar a");
        require(!blk.a.is_zero(), Errc::invalid_covariance, tag + "scalar a must be nonzero");
        try {
            (void)spd_sqrt(blk.b);
        } catch (const CdError& err) {
            throw CdError(Errc::invalid_covariance, tag + "B " + err.what());
        }
        boundaries_.push_back(boundaries_.back() + static_cast<std::size_t>(blk.b.rows()));
    }
}

CovarianceOperator CovarianceOperator::identity(AlgebraLevel level, std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    return CovarianceOperator({{CdReal::scalar(level, 1.0), Eigen::MatrixXd::Identity(nn, nn)}});
}

std::size_t CovarianceOperator::block_of(std::size_t k) const {
    for (std::size_t j = 0; j + 1 < boundaries_.size(); ++j) {
        if (k < boundaries_[j + 1]) return j;
    }
    throw CdError(Errc::dimension_mismatch, "coordinate outside covariance dimension");
}

namespace {

// Block-diagonal A_r matrix with blocks scalar_j * mats_j.
CdMatrix block_diag(const CovarianceOperator& u, const std::vector<CdReal>& scalars,
                    const std::vector<Eigen::MatrixXd>& mats) {
    const AlgebraLevel level = u.level();
    CdMatrix out(level, u.dim(), u.dim());
    for (std::size_t j = 0; j < scalars.size(); ++j) {
        const std::size_t off = u.boundaries()[j];
        for (Eigen::Index p = 0; p < mats[j].rows(); ++p) {
            for (Eigen::Index q = 0; q < mats[j].cols(); ++q) {
                out(off + static_cast<std::size_t>(p), off + static_cast<std::size_t>(q)) = scalars[j] * mats[j](p, q);
            }
        }
    }
    return out;
}

CdMatrix sqrt_matrix(const CovarianceOperator& u, bool conjugate) {
    std::vector<CdReal> scalars;
    std::vector<Eigen::MatrixXd> mats;
    for (std::size_t j = 0; j < u.blocks().size(); ++j) {
        try {
            const CdReal s = cd_sqrt(u.blocks()[j].a);
            scalars.push_back(conjugate ? cd_conj(s) : s);
            mats.push_back(spd_sqrt(u.blocks()[j].b));
        } catch (const CdError& err) {
            throw CdError(err.code(), "block " + std::to_string(j + 1) + ": " + err.what());
        }
    }
    return block_diag(u, scalars, mats);
}

}  // namespace

RightLinearOp CovarianceOperator::as_operator() const {
    std::vector<CdReal> scalars;
    std::vector<Eigen::MatrixXd> mats;
    for (const auto& blk : blocks_) {
        scalars.push_back(blk.a);
        mats.push_back(blk.b);
    }
    const CdMatrix m = block_diag(*this, scalars, mats);
    const CdMatrix z(level(), dim(), dim());
    return {m, z, z, m};
}

RightLinearOp cov_sqrt(const CovarianceOperator& u) {
    const CdMatrix m = sqrt_matrix(u, false);
    const CdMatrix z(u.level(), u.dim(), u.dim());
    return {m, z, z, m};
}

RightLinearOp cov_sqrt_adjoint(const CovarianceOperator& u) {
    const CdMatrix m = sqrt_matrix(u, true);
    const CdMatrix z(u.level(), u.dim(), u.dim());
    return {m, z, z, m};
}

ComplexCovariance::ComplexCovariance(CovarianceOperator u0, std::optional<CovarianceOperator> u1)
    : u0_(std::move(u0)), u1_(std::move(u1)) {
    if (u1_) {
        require(u1_->level() == u0_.level(), Errc::invalid_covariance, "U0 and U1 levels differ");
        require(u1_->dim() == u0_.dim(), Errc::invalid_covariance, "U0 and U1 dimensions differ");
    }
    const AlgebraLevel level = u0_.level();
    const std::size_t n = u0_.dim();
    injection_.resize(static_cast<Eigen::Index>(real_dim(level, n)), static_cast<Eigen::Index>(noise_dim()));
    const RightLinearOp s0 = cov_sqrt(u0_);
    max_sqrt_hs2_ = hs_norm2(s0);
    for (std::size_t k = 0; k < n; ++k) {
        injection_.col(static_cast<Eigen::Index>(k)) =
            s0.realized().m.col(static_cast<Eigen::Index>(vec_index(level, k, 0, 0)));
    }
    if (u1_) {
        const RightLinearOp s1 = cov_sqrt(*u1_);
        max_sqrt_hs2_ = std::max(max_sqrt_hs2_, hs_norm2(s1));
        for (std::size_t k = 0; k < n; ++k) {
            injection_.col(static_cast<Eigen::Index>(n + k)) =
                s1.realized().m.col(static_cast<Eigen::Index>(vec_index(level, k, 1, 0)));
        }
    }
}

RealizedOp op_exp_left(const RealizedOp& g, double t, double tol) {
    require(t >= 0.0, Errc::invalid_argument, "exp_l requires t >= 0");
    require(g.in_n == g.out_n, Errc::dimension_mismatch, "exp_l needs a square operator");
    const Eigen::MatrixXd a = g.m * t;
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = sum;
    for (int k = 1; k < 64; ++k) {
        term = term * b / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().colwise().sum().maxCoeff() <= tol * 0.1) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return {g.level, g.out_n, g.in_n, std::move(sum)};
}

double f_functional(const RightLinearOp& s, const ComplexCovariance& u) {
    require(s.cols() == u.dim(), Errc::dimension_mismatch, "F functional: operator input vs covariance");
    require(s.level() == u.level(), Errc::level_mismatch, "F functional");
    double total = 0.0;
    for (int k = 0; k < 2; ++k) {
        if (k == 1 && !u.u1()) continue;
        const CdMatrix root = cov_sqrt(k == 0 ? u.u0() : *u.u1()).block(0, 0);
        for (int l = 0; l < 2; ++l) {
            const CdMatrix& blk = s.block(l, k);
            if (blk.is_zero()) continue;
            total += op_trace_aa_star(blk * root);
        }
    }
    return total;
}

double f_functional(const RealizedOp& s, const ComplexCovariance& u) {
    require(s.in_n == u.dim(), Errc::dimension_mismatch, "F functional: operator input vs covariance");
    require(s.level == u.level(), Errc::level_mismatch, "F functional");
    return (s.m * u.injection()).squaredNorm();
}

}  // namespace cdstoch
