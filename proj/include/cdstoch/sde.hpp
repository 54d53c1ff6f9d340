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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdstoch/check.hpp"
#include "cdstoch/linops.hpp"
#include "cdstoch/paths.hpp"

namespace cdstoch {

/// Drift G(t, y) on vec coordinates of the state.
using DriftFn = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& out)>;
/// Diffusion H(t, y) as a realized operator from the driver's vec coordinates to the state's.
using DiffusionFn = std::function<void(double t, const Eigen::VectorXd& y, Eigen::MatrixXd& out)>;

/// zeta = mean + scale * (g_re + i g_im) i_0 per component, g independent standard normals.
struct InitialSampler {
    CdVector mean;
    double scale = 0.0;

    void sample(std::uint64_t seed, std::uint64_t replica, Eigen::VectorXd& out) const;
    /// E ||zeta||^2 = ||mean||^2 + 4 h scale^2.
    [[nodiscard]] double mean_norm2() const;
};

/// dY = G(t, Y) dt + H(t, Y) dw on the grid's window, Y(a) = zeta.
struct SdeProblem {
    AlgebraLevel level;
    std::size_t n;  ///< state components h
    DriftFn g;
    DiffusionFn h;
    InitialSampler zeta;
    double k_const;  ///< declared Lipschitz / growth constant
    TimeGrid grid;
    ComplexCovariance u;
    CdVector p;
    /// Present for linear problems (G y = g_linear y, H constant).
    std::optional<RealizedOp> g_linear;
    std::optional<RealizedOp> h_const;

    /// Linear problem with constant operators; k defaults to max(||G||_op, ||H||_2).
    static SdeProblem linear(const RealizedOp& g, const RealizedOp& h, InitialSampler zeta, TimeGrid grid,
                             ComplexCovariance u, CdVector p, std::optional<double> k = std::nullopt);

    /// Problem from maps on CdVector values.
    static SdeProblem from_cd(AlgebraLevel level, std::size_t n,
                              std::function<CdVector(double, const CdVector&)> g,
                              std::function<RightLinearOp(double, const CdVector&)> h, InitialSampler zeta,
                              double k_const, TimeGrid grid, ComplexCovariance u, CdVector p);

    [[nodiscard]] Eigen::Index state_dim() const { return static_cast<Eigen::Index>(real_dim(level, n)); }
    [[nodiscard]] PathEnsemble noise(std::uint64_t seed, std::size_t replicas) const {
        return PathEnsemble(grid, u, p, seed, replicas);
    }
    [[nodiscard]] bool drift_free() const;
};

inline constexpr double kDivergenceLimit = 1e12;

// --- per-path schemes --------------------------------------------------------------------
// y is resized to state_dim x (K+1) for the given grid; dw holds K driver increments. All return
// false when a coordinate leaves [-1e12, 1e12] or turns non-finite.

/// Y_{l+1} = Y_l + G(t_l, Y_l) dt_l + H(t_l, Y_l) dw_l.
bool euler_path(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                const Eigen::VectorXd& zeta, Eigen::MatrixXd& y);

/// Picard iterates X_{m+1} = Q X_m from X_0 = zeta, left-endpoint quadrature, exactly `iterations`
/// steps or until two iterates coincide. When dist2 is given its row m holds ||X_{m+1} - X_m||^2
/// at every grid point (rows past the fixed point are zero). Returns the iterations performed.
std::size_t picard_path(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                        const Eigen::VectorXd& zeta, std::size_t iterations, Eigen::MatrixXd& y,
                        Eigen::MatrixXd* dist2 = nullptr, bool* finite = nullptr);

/// Y_{l+1} = exp_l(G dt_l)(Y_l + H dw_l), i.e. exp_l(G t) zeta plus the discretized convolution.
bool closed_form_path(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                      const Eigen::VectorXd& zeta, Eigen::MatrixXd& y);

/// Sum of consecutive groups of `stride` increment columns.
Eigen::MatrixXd aggregate_increments(const Eigen::Ref<const Eigen::MatrixXd>& dw, std::size_t stride);

// --- ensembles ---------------------------------------------------------------------------

enum class Scheme { picard, euler, closed_form };
const char* to_string(Scheme s) noexcept;

struct SolutionEnsemble {
    Scheme scheme = Scheme::euler;
    std::vector<double> times;
    Eigen::VectorXd mean_norm2;     ///< E ||Y(t_l)||^2
    Eigen::VectorXd mean_norm2_se;
    std::size_t replicas = 0;
    std::size_t diverged = 0;
    // Picard diagnostics.
    std::size_t iterations = 0;
    bool converged = true;
    std::vector<double> distances;  ///< ||X_{m+1} - X_m||_{B_{2,inf}}, m = 0, 1, ...

    [[nodiscard]] double b2inf() const;
};

SolutionEnsemble euler_maruyama(const SdeProblem& pr, const PathEnsemble& ens, int threads = 0);
SolutionEnsemble linear_closed_form(const SdeProblem& pr, const PathEnsemble& ens, int threads = 0);
/// Stops at the first m with distance < tol; throws Errc::non_convergence (with the distance
/// trace in the message) when m_max is reached first and `throw_on_failure` is set.
SolutionEnsemble picard_solve(const SdeProblem& pr, const PathEnsemble& ens, std::size_t m_max = 40,
                              double tol = 1e-8, int threads = 0, bool throw_on_failure = true);

/// (sup_l mean_i ||X_i(t_l)||^2)^{1/2} over per-replica paths in vec coordinates.
double b2inf_norm(const std::vector<Eigen::MatrixXd>& paths);
inline double b2inf_norm(const SolutionEnsemble& s) { return s.b2inf(); }

// --- checks ------------------------------------------------------------------------------

/// Random-probe falsification of the Lipschitz and linear-growth conditions with constant K.
CheckGroup lipschitz_validate(const SdeProblem& pr, std::size_t samples, std::uint64_t seed = 1);

/// Picard on the noise ensemble: convergence, factorial decay of the iteration distances,
/// agreement with Euler-Maruyama on the same grid, and the a-priori second-moment bound.
CheckGroup picard_checks(const SdeProblem& pr, const PathEnsemble& ens, std::size_t m_max = 40, double tol = 1e-8,
                         int threads = 0);

/// Strong error of Euler-Maruyama on grids K/stride against the closed form on the fine grid.
/// The coarse scheme is embedded as a cadlag step process and the B_{2,inf} error is taken over
/// the fine grid; the log-log slope over the strides must lie in [0.35, 0.65].
CheckGroup strong_order_study(const SdeProblem& pr, const PathEnsemble& fine, const std::vector<std::size_t>& strides,
                              int threads = 0);

/// Picard on the fine grid against Euler-Maruyama on coarser grids with aggregated noise:
/// the B_{2,inf} distance on the coarse nodes must shrink as the coarse grid is refined.
CheckGroup uniqueness_study(const SdeProblem& pr, const PathEnsemble& fine, const std::vector<std::size_t>& strides,
                            std::size_t m_max = 40, double tol = 1e-8, int threads = 0);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
/// Two-sample Kolmogorov-Smirnov test with the asymptotic distribution.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Restart at grid index l_mid with the same increments must reproduce the solution exactly;
/// a second half-batch restarted with fresh noise is compared coordinate-wise by KS at `level`.
CheckGroup restart_markov_check(const SdeProblem& pr, const PathEnsemble& ens, std::size_t l_mid, int threads = 0,
                                double level = 0.01);

}  // namespace cdstoch
