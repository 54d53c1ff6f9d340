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

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "cdstoch/algebra.hpp"
#include "cdstoch/linops.hpp"
#include "cdstoch/mc.hpp"

namespace cdstoch {

/// Strictly increasing time points t_0 = a < ... < t_K = b.
class TimeGrid {
  public:
    explicit TimeGrid(std::vector<double> points);
    static TimeGrid uniform(double a, double b, std::size_t steps);

    [[nodiscard]] std::size_t steps() const noexcept { return t_.size() - 1; }
    [[nodiscard]] const std::vector<double>& points() const noexcept { return t_; }
    [[nodiscard]] double operator[](std::size_t l) const { return t_[l]; }
    [[nodiscard]] double start() const noexcept { return t_.front(); }
    [[nodiscard]] double end() const noexcept { return t_.back(); }
    [[nodiscard]] double dt(std::size_t l) const { return t_[l + 1] - t_[l]; }
    /// Index of a grid point; throws if t is not on the grid (1e-12 relative tolerance).
    [[nodiscard]] std::size_t index_of(double t) const;
    /// Every stride-th point (steps() must be divisible by stride).
    [[nodiscard]] TimeGrid coarsen(std::size_t stride) const;

  private:
    std::vector<double> t_;
};

/// K x n matrix of real Wiener increments, row l ~ N(0, dt_l I).
struct NoiseRealization {
    Eigen::MatrixXd increments;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
};

NoiseRealization wiener_sample(const TimeGrid& grid, std::size_t n, std::uint64_t seed, std::uint64_t replica,
                               std::uint32_t stream = 0);

/// Values of w at every grid point for one replica, in vec coordinates (columns are times).
struct PathBuffer {
    Eigen::MatrixXd xi;  ///< noise_dim x K standardized increments (already scaled by sqrt(dt))
    Eigen::MatrixXd dw;  ///< D x K increments w(t_{l+1}) - w(t_l)
    Eigen::MatrixXd w;   ///< D x (K+1), w(t_0) = 0
};

/// Lazily generated ensemble of (U, p)-random functions w(t) = U0^{1/2} xi0(t) + i U1^{1/2} xi1(t)
/// + p (t - t_0). Replica i is a pure function of (seed, i).
class PathEnsemble {
  public:
    PathEnsemble(TimeGrid grid, ComplexCovariance u, CdVector drift, std::uint64_t seed, std::size_t replicas);

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const ComplexCovariance& covariance() const noexcept { return u_; }
    [[nodiscard]] const CdVector& drift() const noexcept { return p_; }
    [[nodiscard]] const Eigen::VectorXd& drift_vec() const noexcept { return p_vec_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::size_t replicas() const noexcept { return replicas_; }
    [[nodiscard]] AlgebraLevel level() const noexcept { return u_.level(); }
    [[nodiscard]] std::size_t dim() const noexcept { return u_.dim(); }
    /// Real coordinates per time point, 2^{r+1} n.
    [[nodiscard]] Eigen::Index vec_dim() const noexcept { return static_cast<Eigen::Index>(real_dim(level(), dim())); }

    /// Fills buf for replica i (reuses buf storage).
    void generate(std::size_t replica, PathBuffer& buf) const;

  private:
    TimeGrid grid_;
    ComplexCovariance u_;
    CdVector p_;
    Eigen::VectorXd p_vec_;
    std::uint64_t seed_;
    std::size_t replicas_;
};

/// Path of CdVector values from explicit noise: w(t_l) = U0^{1/2} xi0(t_l) + i U1^{1/2} xi1(t_l)
/// + p (t_l - t_0). noise1 is ignored when U has no i-part.
std::vector<CdVector> u_path(const TimeGrid& grid, const NoiseRealization& noise0, const NoiseRealization& noise1,
                             const ComplexCovariance& u, const CdVector& p);

/// Mean of w(t2) - w(t1) per vec coordinate.
McReport increment_mean(const PathEnsemble& ens, std::size_t l1, std::size_t l2, int threads = 0);

/// Second-moment estimates for components k, h (0-based), as CdComplex coefficient lists
/// (2^r re coefficients, then 2^r i-part coefficients).
struct IncrementCovariance {
    McReport increment_form;  ///< E[(dw_k - p_k dt)(dw_h - p_h dt)] over [t1, t2]
    McReport as_stated;       ///< E[(w_k(t2) - p_k t2)(w_h(t1) - p_h t1)]
    CdComplex expected;       ///< (t2 - t1)(U0_{kh} - U1_{kh})
    CdComplex classical_two_time;  ///< (t1 - t0)(U0_{kh} - U1_{kh})
};
IncrementCovariance increment_cov_estimator(const PathEnsemble& ens, std::size_t l1, std::size_t l2, std::size_t k,
                                            std::size_t h, int threads = 0);

/// Complex Monte Carlo estimate: real and imaginary parts with their covariance.
struct ComplexEstimate {
    std::complex<double> value;
    double var_re = 0.0;  ///< variance of the mean
    double var_im = 0.0;
    double cov = 0.0;
    std::size_t samples = 0;

    /// Squared Mahalanobis distance of target from the estimate.
    [[nodiscard]] double mahalanobis2(std::complex<double> target) const;
};

/// Empirical psi(t_l, y) = mean of exp(i y(w(t_l))) for each requested grid index.
std::vector<ComplexEstimate> char_functional_estimator(const PathEnsemble& ens, const RealFunctional& y,
                                                       const std::vector<std::size_t>& indices, int threads = 0);

/// exp(i t y(p) - t |R^T c|^2 / 2) for elapsed time t.
std::complex<double> char_functional_closed_form(const ComplexCovariance& u, const CdVector& p,
                                                 const RealFunctional& y, double t);

/// CSV rows replica,t,component,basis,part,value for replicas [0, count).
void write_paths_csv(std::ostream& out, const PathEnsemble& ens, std::size_t count);

}  // namespace cdstoch
