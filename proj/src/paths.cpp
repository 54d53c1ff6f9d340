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
#include "cdstoch/paths.hpp"

#include <algorithm>

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "cdstoch/rng.hpp"

namespace cdstoch {

// --- TimeGrid -----------------------------------------------------------------------------

TimeGrid::TimeGrid(std::vector<double> points) : t_(std::move(points)) {
    if (t_.size() < 2) throw CdError(Errc::invalid_argument, "time grid needs at least one step");
    for (std::size_t l = 0; l < t_.size(); ++l) {
        if (!std::isfinite(t_[l])) throw CdError(Errc::non_finite, "time grid point");
        if (l > 0 && !(t_[l] > t_[l - 1])) throw CdError(Errc::invalid_argument, "time grid not strictly increasing");
    }
}

TimeGrid TimeGrid::uniform(double a, double b, std::size_t steps) {
    if (steps == 0 || !(b > a)) throw CdError(Errc::invalid_argument, "uniform grid needs a < b and K >= 1");
    std::vector<double> t(steps + 1);
    for (std::size_t l = 0; l <= steps; ++l) {
        t[l] = a + (b - a) * static_cast<double>(l) / static_cast<double>(steps);
    }
    t.back() = b;
    return TimeGrid(std::move(t));
}

std::size_t TimeGrid::index_of(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::max(std::abs(start()), std::abs(end())));
    const auto it = std::lower_bound(t_.begin(), t_.end(), t - tol);
    if (it != t_.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - t_.begin());
    throw CdError(Errc::invalid_argument, "time " + std::to_string(t) + " is not a grid point");
}

TimeGrid TimeGrid::coarsen(std::size_t stride) const {
    if (stride == 0 || steps() % stride != 0) {
        throw CdError(Errc::invalid_argument, "coarsening stride must divide the step count");
    }
    std::vector<double> t;
    for (std::size_t l = 0; l < t_.size(); l += stride) t.push_back(t_[l]);
    return TimeGrid(std::move(t));
}

// --- sampling -----------------------------------------------------------------------------

NoiseRealization wiener_sample(const TimeGrid& grid, std::size_t n, std::uint64_t seed, std::uint64_t replica,
                               std::uint32_t stream) {
    if (n == 0) throw CdError(Errc::invalid_argument, "noise dimension must be positive");
    NoiseRealization out;
    out.seed = seed;
    out.replica = replica;
    out.increments.resize(static_cast<Eigen::Index>(grid.steps()), static_cast<Eigen::Index>(n));
    NormalStream gen(seed, replica, stream);
    for (std::size_t l = 0; l < grid.steps(); ++l) {
        const double s = std::sqrt(grid.dt(l));
        for (std::size_t k = 0; k < n; ++k) {
            out.increments(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = s * gen.next();
        }
    }
    return out;
}

PathEnsemble::PathEnsemble(TimeGrid grid, ComplexCovariance u, CdVector drift, std::uint64_t seed,
                           std::size_t replicas)
    : grid_(std::move(grid)), u_(std::move(u)), p_(std::move(drift)), seed_(seed), replicas_(replicas) {
    if (p_.level() != u_.level() || p_.size() != u_.dim()) {
        throw CdError(Errc::dimension_mismatch, "drift must match the covariance dimension and level");
    }
    p_vec_ = to_vec(p_);
}

void PathEnsemble::generate(std::size_t replica, PathBuffer& buf) const {
    const auto K = static_cast<Eigen::Index>(grid_.steps());
    const auto n = static_cast<Eigen::Index>(dim());
    const Eigen::MatrixXd& r = u_.injection();
    buf.xi.resize(r.cols(), K);
    NormalStream g0(seed_, replica, channel::xi0);
    for (Eigen::Index l = 0; l < K; ++l) {
        const double s = std::sqrt(grid_.dt(static_cast<std::size_t>(l)));
        for (Eigen::Index k = 0; k < n; ++k) buf.xi(k, l) = s * g0.next();
    }
    if (u_.u1()) {
        NormalStream g1(seed_, replica, channel::xi1);
        for (Eigen::Index l = 0; l < K; ++l) {
            const double s = std::sqrt(grid_.dt(static_cast<std::size_t>(l)));
            for (Eigen::Index k = 0; k < n; ++k) buf.xi(n + k, l) = s * g1.next();
        }
    }
    buf.dw.noalias() = r * buf.xi;
    buf.w.resize(r.rows(), K + 1);
    buf.w.col(0).setZero();
    for (Eigen::Index l = 0; l < K; ++l) {
        buf.dw.col(l) += p_vec_ * grid_.dt(static_cast<std::size_t>(l));
        buf.w.col(l + 1) = buf.w.col(l) + buf.dw.col(l);
    }
}

std::vector<CdVector> u_path(const TimeGrid& grid, const NoiseRealization& noise0, const NoiseRealization& noise1,
                             const ComplexCovariance& u, const CdVector& p) {
    const auto K = static_cast<Eigen::Index>(grid.steps());
    const auto n = static_cast<Eigen::Index>(u.dim());
    if (noise0.increments.rows() != K || noise0.increments.cols() != n) {
        throw CdError(Errc::dimension_mismatch, "noise0 shape does not match grid and covariance");
    }
    if (u.u1() && (noise1.increments.rows() != K || noise1.increments.cols() != n)) {
        throw CdError(Errc::dimension_mismatch, "noise1 shape does not match grid and covariance");
    }
    if (p.size() != u.dim() || p.level() != u.level()) throw CdError(Errc::dimension_mismatch, "drift");
    const Eigen::VectorXd pv = to_vec(p);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u.noise_dim()));
    std::vector<CdVector> out;
    out.reserve(grid.steps() + 1);
    out.push_back(CdVector(u.level(), u.dim()));
    for (Eigen::Index l = 0; l < K; ++l) {
        xi.head(n) += noise0.increments.row(l).transpose();
        if (u.u1()) xi.tail(n) += noise1.increments.row(l).transpose();
        const double elapsed = grid[static_cast<std::size_t>(l + 1)] - grid.start();
        out.push_back(from_vec(u.level(), u.injection() * xi + pv * elapsed));
    }
    return out;
}

// --- estimators ---------------------------------------------------------------------------

McReport increment_mean(const PathEnsemble& ens, std::size_t l1, std::size_t l2, int threads) {
    if (!(l1 < l2 && l2 <= ens.grid().steps())) throw CdError(Errc::invalid_argument, "need t1 < t2 on the grid");
    const auto acc = mc_moments(
        ens.replicas(), ens.vec_dim(),
        [&ens, l1, l2] {
            return [&ens, l1, l2, buf = PathBuffer{}](std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                out = buf.w.col(static_cast<Eigen::Index>(l2)) - buf.w.col(static_cast<Eigen::Index>(l1));
            };
        },
        threads);
    return McReport::from(acc, ens.seed());
}

namespace {

CdComplex component(AlgebraLevel level, const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t k) {
    CdComplex z(level);
    for (std::size_t b = 0; b < level.dim(); ++b) {
        z.re[b] = v[static_cast<Eigen::Index>(vec_index(level, k, 0, b))];
        z.im[b] = v[static_cast<Eigen::Index>(vec_index(level, k, 1, b))];
    }
    return z;
}

void store(const CdComplex& z, Eigen::Ref<Eigen::VectorXd> out, Eigen::Index offset) {
    const auto d = static_cast<Eigen::Index>(z.re.dim());
    for (Eigen::Index b = 0; b < d; ++b) {
        out[offset + b] = z.re[static_cast<std::size_t>(b)];
        out[offset + d + b] = z.im[static_cast<std::size_t>(b)];
    }
}

CdComplex covariance_entry(const ComplexCovariance& u, std::size_t k, std::size_t h) {
    CdComplex out(u.level());
    out.re = u.u0().as_operator().block(0, 0)(k, h);
    if (u.u1()) out.re -= u.u1()->as_operator().block(0, 0)(k, h);
    return out;
}

}  // namespace

IncrementCovariance increment_cov_estimator(const PathEnsemble& ens, std::size_t l1, std::size_t l2, std::size_t k,
                                            std::size_t h, int threads) {
    if (!(l1 < l2 && l2 <= ens.grid().steps())) throw CdError(Errc::invalid_argument, "need t1 < t2 on the grid");
    if (k >= ens.dim() || h >= ens.dim()) throw CdError(Errc::invalid_argument, "component index out of range");
    const AlgebraLevel level = ens.level();
    const auto d2 = static_cast<Eigen::Index>(2 * level.dim());
    const TimeGrid& g = ens.grid();
    const double t0 = g.start(), t1 = g[l1], t2 = g[l2];
    const CdVector& p = ens.drift();

    const auto acc = mc_moments(
        ens.replicas(), 2 * d2,
        [&, d2] {
            return [&, d2, buf = PathBuffer{}](std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                const Eigen::VectorXd inc =
                    buf.w.col(static_cast<Eigen::Index>(l2)) - buf.w.col(static_cast<Eigen::Index>(l1));
                const CdComplex xk = component(level, inc, k) - p[k] * (t2 - t1);
                const CdComplex xh = component(level, inc, h) - p[h] * (t2 - t1);
                store(cdc_mul(xk, xh), out, 0);
                const CdComplex ak = component(level, buf.w.col(static_cast<Eigen::Index>(l2)), k) - p[k] * (t2 - t0);
                const CdComplex bh = component(level, buf.w.col(static_cast<Eigen::Index>(l1)), h) - p[h] * (t1 - t0);
                store(cdc_mul(ak, bh), out, d2);
            };
        },
        threads);

    IncrementCovariance res{McReport{}, McReport{}, CdComplex(level), CdComplex(level)};
    const McReport all = McReport::from(acc, ens.seed());
    res.increment_form.seed = res.as_stated.seed = ens.seed();
    res.increment_form.values.assign(all.values.begin(), all.values.begin() + d2);
    res.as_stated.values.assign(all.values.begin() + d2, all.values.end());
    const CdComplex entry = covariance_entry(ens.covariance(), k, h);
    res.expected = entry * (t2 - t1);
    res.classical_two_time = entry * (t1 - t0);
    return res;
}

double ComplexEstimate::mahalanobis2(std::complex<double> target) const {
    const double dr = value.real() - target.real();
    const double di = value.imag() - target.imag();
    const double det = var_re * var_im - cov * cov;
    const double scale = std::max(var_re, var_im);
    if (scale == 0.0) return (dr == 0.0 && di == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    if (det <= 1e-12 * scale * scale) {
        // nearly one-dimensional: test along the dominant direction only
        return (dr * dr + di * di) / (var_re + var_im);
    }
    return (var_im * dr * dr - 2.0 * cov * dr * di + var_re * di * di) / det;
}

std::vector<ComplexEstimate> char_functional_estimator(const PathEnsemble& ens, const RealFunctional& y,
                                                       const std::vector<std::size_t>& indices, int threads) {
    if (y.level() != ens.level() || y.components() != ens.dim()) {
        throw CdError(Errc::dimension_mismatch, "functional does not match the ensemble");
    }
    for (std::size_t l : indices) {
        if (l > ens.grid().steps()) throw CdError(Errc::invalid_argument, "grid index out of range");
    }
    const auto m = static_cast<Eigen::Index>(indices.size());
    const auto acc = mc_moments(
        ens.replicas(), 3 * m,
        [&] {
            return [&, buf = PathBuffer{}](std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                for (Eigen::Index j = 0; j < m; ++j) {
                    const double phase = y(buf.w.col(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)])));
                    const double c = std::cos(phase), s = std::sin(phase);
                    out[3 * j] = c;
                    out[3 * j + 1] = s;
                    out[3 * j + 2] = c + s;
                }
            };
        },
        threads);
    std::vector<ComplexEstimate> res;
    const Eigen::VectorXd var = acc.variance() / static_cast<double>(acc.count());
    for (Eigen::Index j = 0; j < m; ++j) {
        ComplexEstimate e;
        e.value = {acc.mean()[3 * j], acc.mean()[3 * j + 1]};
        e.var_re = var[3 * j];
        e.var_im = var[3 * j + 1];
        e.cov = 0.5 * (var[3 * j + 2] - e.var_re - e.var_im);
        e.samples = acc.count();
        res.push_back(e);
    }
    return res;
}

std::complex<double> char_functional_closed_form(const ComplexCovariance& u, const CdVector& p,
                                                 const RealFunctional& y, double t) {
    if (t < 0.0) throw CdError(Errc::invalid_argument, "elapsed time must be non-negative");
    const double drift = y(p);
    const double var = (u.injection().transpose() * y.coeffs()).squaredNorm();
    return std::exp(std::complex<double>(-0.5 * t * var, t * drift));
}

void write_paths_csv(std::ostream& out, const PathEnsemble& ens, std::size_t count) {
    const AlgebraLevel level = ens.level();
    out << "replica,t,component,basis,part,value\n";
    out.precision(17);
    PathBuffer buf;
    for (std::size_t i = 0; i < std::min(count, ens.replicas()); ++i) {
        ens.generate(i, buf);
        for (std::size_t l = 0; l <= ens.grid().steps(); ++l) {
            for (std::size_t k = 0; k < ens.dim(); ++k) {
                for (int part = 0; part < 2; ++part) {
                    for (std::size_t b = 0; b < level.dim(); ++b) {
                        out << i << ',' << ens.grid()[l] << ',' << k << ',' << b << ',' << (part == 0 ? "re" : "im")
                            << ',' << buf.w(static_cast<Eigen::Index>(vec_index(level, k, part, b)),
                                            static_cast<Eigen::Index>(l))
                            << '\n';
                    }
                }
            }
        }
    }
}

}  // namespace cdstoch
