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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "cdstoch/check.hpp"
#include "cdstoch/linops.hpp"
#include "cdstoch/paths.hpp"

namespace cdstoch {

/// Path values visible to an integrand at grid index l: columns 0..l of w (vec coordinates).
struct PathPrefix {
    const TimeGrid& grid;
    Eigen::Ref<const Eigen::MatrixXd> w;
    std::size_t l;
    /// Whole path; set only for look-ahead (non-adapted) integrands.
    const Eigen::MatrixXd* full = nullptr;

    [[nodiscard]] double t() const { return grid[l]; }
    [[nodiscard]] Eigen::VectorXd current() const { return w.col(static_cast<Eigen::Index>(l)); }
};

/// Writes the realized operator for the step (t_l, t_{l+1}] into out (resized by the caller).
using IntegrandFn = std::function<void(const PathPrefix&, Eigen::MatrixXd& out)>;

/// Operator-valued integrand on a path grid, in realized form.
class Integrand {
  public:
    /// Deterministic constant operator.
    static Integrand constant(const RealizedOp& op);
    static Integrand constant(const RightLinearOp& op) { return constant(op.realized()); }
    /// Predictable integrand: fn sees the prefix up to t_l. bound is the declared certificate
    /// C >= E int ||S||_2^2 (infinity if unknown).
    static Integrand predictable(AlgebraLevel level, std::size_t out_n, std::size_t in_n, IntegrandFn fn,
                                 double bound = std::numeric_limits<double>::infinity());
    /// Elementary integrand S = sum_j S_j ch_(p_j, p_{j+1}]; slot j sees the prefix up to p_j.
    /// Partition points must lie on the path grid; outside [p_0, p_k] the integrand is zero.
    static Integrand step(AlgebraLevel level, std::size_t out_n, std::size_t in_n, TimeGrid partition,
                         std::vector<IntegrandFn> slots);
    /// Look-ahead control: fn additionally receives the whole path. Not adapted.
    static Integrand anticipating(AlgebraLevel level, std::size_t out_n, std::size_t in_n, IntegrandFn fn);
    /// Pointwise sum.
    static Integrand sum(const Integrand& a, const Integrand& b);

    [[nodiscard]] AlgebraLevel level() const noexcept { return level_; }
    [[nodiscard]] std::size_t out_n() const noexcept { return out_n_; }
    [[nodiscard]] std::size_t in_n() const noexcept { return in_n_; }
    [[nodiscard]] bool adapted() const noexcept { return adapted_; }
    [[nodiscard]] bool is_constant() const noexcept { return constant_ != nullptr; }
    [[nodiscard]] const Eigen::MatrixXd& constant_matrix() const { return *constant_; }
    [[nodiscard]] double declared_bound() const noexcept { return bound_; }

    /// Realized S on (t_l, t_{l+1}] for the path w on grid.
    void evaluate(const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t l, Eigen::MatrixXd& out) const;

  private:
    Integrand(AlgebraLevel level, std::size_t out_n, std::size_t in_n);

    AlgebraLevel level_;
    std::size_t out_n_;
    std::size_t in_n_;
    bool adapted_ = true;
    double bound_ = std::numeric_limits<double>::infinity();
    std::shared_ptr<const Eigen::MatrixXd> constant_;
    std::function<void(const TimeGrid&, const Eigen::MatrixXd&, std::size_t, Eigen::MatrixXd&)> eval_;
};

/// Running quadratures along one path: cumulative int F(S;U0,U1) dt and int ||S||_2^2 dt at each
/// grid point.
struct StepTrace {
    Eigen::VectorXd int_f;
    Eigen::VectorXd int_hs2;
};

/// eta(t_l) = int_{t_0}^{t_l} S dw for every grid index, as a (2^{r+1} h) x (K+1) matrix.
/// trace is filled when both trace and u are given.
void integrate(const Integrand& s, const TimeGrid& grid, const Eigen::MatrixXd& w, Eigen::MatrixXd& eta,
               StepTrace* trace = nullptr, const ComplexCovariance* u = nullptr);

/// int_{t_from}^{t_to} S dw on one path (grid indices).
Eigen::VectorXd integrate_range(const Integrand& s, const TimeGrid& grid, const Eigen::MatrixXd& w,
                                std::size_t from, std::size_t to);

/// Path given as CdVector values (u_path output).
Eigen::MatrixXd path_matrix(const std::vector<CdVector>& path);

/// sum_l S_l (w(t_{l+1} ^ t) - w(t_l ^ t)) for an elementary integrand; t must be a grid point.
CdVector elementary_integral(const Integrand& s, const TimeGrid& grid, const std::vector<CdVector>& path, double t);
/// Grid-step discretization of a predictable integrand (same evaluation rule).
CdVector predictable_integral(const Integrand& s, const TimeGrid& grid, const std::vector<CdVector>& path, double t);

// --- Monte Carlo checks -------------------------------------------------------------------
// All checks run over ens.replicas() paths with a deterministic start at t_0.

/// Mean of eta(t_l) within 4 standard errors of 0 in every coordinate.
CheckGroup zero_mean_check(const Integrand& s, const PathEnsemble& ens, std::size_t l, int threads = 0);

/// E <eta, eta> against E int Tr({S U^{1/2}}{(U^{1/2})* S*}) for A_r-valued S and w.
CheckGroup isometry_check(const Integrand& s, const PathEnsemble& ens, std::size_t l, int threads = 0);

/// M1 = E ||eta||^2, M2 = 2 E int F, M3 = max ||U_k^{1/2}||_2^2 E int ||S||_2^2.
CheckGroup bound_check(const Integrand& s, const PathEnsemble& ens, std::size_t l, int threads = 0);

/// Unconditional and 8-bin conditional means of eta(t2) - eta(t1).
CheckGroup martingale_check(const Integrand& s, const PathEnsemble& ens, std::size_t l1, std::size_t l2,
                            int threads = 0, int bins = 8);

/// Tail of sup_t ||eta|| against the two maximal-inequality bounds.
CheckGroup chebyshev_check(const Integrand& s, const PathEnsemble& ens, double beta, double alpha, int threads = 0);

/// sup over |t - t'| <= delta of P{||eta(t) - eta(t')|| > eps} for delta = s (b - a)/K with
/// s in separations (ascending, default 1, 2, 4, ..., K/2).
CheckGroup stochastic_continuity_check(const Integrand& s, const PathEnsemble& ens, double eps,
                                       std::vector<std::size_t> separations = {}, int threads = 0);

/// Mean-square change of eta(b) between the path grid and its successive 2x coarsenings.
CheckGroup refinement_check(const Integrand& s, const PathEnsemble& ens, int halvings = 4, int threads = 0);

/// Binomial standard error sqrt(p(1-p)/n).
inline double binomial_se(double p, std::size_t n) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(std::max<std::size_t>(n, 1)));
}

}  // namespace cdstoch
