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
#include "cdstoch/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "cdstoch/mc.hpp"
#include "cdstoch/rng.hpp"

namespace cdstoch {

namespace {

void require(bool ok, Errc code, const std::string& what) {
    if (!ok) throw CdError(code, what);
}

bool bounded(const Eigen::Ref<const Eigen::VectorXd>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(std::abs(v[i]) <= kDivergenceLimit)) return false;
    }
    return true;
}

double norm(const Eigen::Ref<const Eigen::VectorXd>& v) { return std::sqrt(vec_norm2(v)); }

/// out = base + G(t, at) dt + H(t, at) dw. Shared by every scheme so that identical inputs give
/// identical floating-point results.
struct Stepper {
    const SdeProblem& pr;
    Eigen::VectorXd gv;
    Eigen::MatrixXd hm;
    Eigen::VectorXd hdw;

    explicit Stepper(const SdeProblem& p) : pr(p) {}

    void advance(double t, double dt, const Eigen::VectorXd& at, const Eigen::Ref<const Eigen::VectorXd>& base,
                 const Eigen::Ref<const Eigen::VectorXd>& dw, Eigen::Ref<Eigen::VectorXd> out) {
        pr.g(t, at, gv);
        pr.h(t, at, hm);
        hdw.noalias() = hm * dw;
        out = base + gv * dt + hdw;
    }
};

void check_shapes(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                  const Eigen::VectorXd& zeta) {
    require(dw.cols() == static_cast<Eigen::Index>(grid.steps()), Errc::dimension_mismatch,
            "increment count does not match the grid");
    require(dw.rows() == static_cast<Eigen::Index>(real_dim(pr.level, pr.u.dim())), Errc::dimension_mismatch,
            "increment dimension does not match the driver");
    require(zeta.size() == pr.state_dim(), Errc::dimension_mismatch, "initial value dimension");
}

double sigma_max(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
}

}  // namespace

// --- problem ------------------------------------------------------------------------------

void InitialSampler::sample(std::uint64_t seed, std::uint64_t replica, Eigen::VectorXd& out) const {
    out = to_vec(mean);
    if (scale == 0.0) return;
    NormalStream s(seed, replica, channel::zeta);
    for (std::size_t j = 0; j < mean.size(); ++j) {
        out[static_cast<Eigen::Index>(vec_index(mean.level(), j, 0, 0))] += scale * s.next();
        out[static_cast<Eigen::Index>(vec_index(mean.level(), j, 1, 0))] += scale * s.next();
    }
}

double InitialSampler::mean_norm2() const {
    return cdc_norm2(mean) + 4.0 * static_cast<double>(mean.size()) * scale * scale;
}

SdeProblem SdeProblem::linear(const RealizedOp& g, const RealizedOp& h, InitialSampler zeta, TimeGrid grid,
                              ComplexCovariance u, CdVector p, std::optional<double> k) {
    require(g.out_n == g.in_n && h.out_n == g.out_n && h.in_n == u.dim() && g.level == u.level() &&
                h.level == u.level(),
            Errc::dimension_mismatch, "linear problem operator shapes");
    require(zeta.mean.size() == g.out_n, Errc::dimension_mismatch, "initial value dimension");
    const double kk = k.value_or(std::max(sigma_max(g.m), std::sqrt(hs_norm2(h))));
    auto gm = std::make_shared<const Eigen::MatrixXd>(g.m);
    auto hm = std::make_shared<const Eigen::MatrixXd>(h.m);
    SdeProblem pr{g.level,
                  g.out_n,
                  [gm](double, const Eigen::VectorXd& y, Eigen::VectorXd& out) { out.noalias() = *gm * y; },
                  [hm](double, const Eigen::VectorXd&, Eigen::MatrixXd& out) { out = *hm; },
                  std::move(zeta),
                  kk,
                  std::move(grid),
                  std::move(u),
                  std::move(p),
                  g,
                  h};
    return pr;
}

SdeProblem SdeProblem::from_cd(AlgebraLevel level, std::size_t n, std::function<CdVector(double, const CdVector&)> g,
                               std::function<RightLinearOp(double, const CdVector&)> h, InitialSampler zeta,
                               double k_const, TimeGrid grid, ComplexCovariance u, CdVector p) {
    return SdeProblem{
        level,
        n,
        [g, level](double t, const Eigen::VectorXd& y, Eigen::VectorXd& out) { out = to_vec(g(t, from_vec(level, y))); },
        [h, level](double t, const Eigen::VectorXd& y, Eigen::MatrixXd& out) { out = h(t, from_vec(level, y)).realized().m; },
        std::move(zeta),
        k_const,
        std::move(grid),
        std::move(u),
        std::move(p),
        std::nullopt,
        std::nullopt};
}

bool SdeProblem::drift_free() const { return to_vec(p).isZero(0.0); }

// --- schemes ------------------------------------------------------------------------------

bool euler_path(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                const Eigen::VectorXd& zeta, Eigen::MatrixXd& y) {
    check_shapes(pr, grid, dw, zeta);
    const auto K = static_cast<Eigen::Index>(grid.steps());
    y.resize(pr.state_dim(), K + 1);
    y.col(0) = zeta;
    Stepper st(pr);
    Eigen::VectorXd yl;
    for (Eigen::Index l = 0; l < K; ++l) {
        yl = y.col(l);
        const auto ul = static_cast<std::size_t>(l);
        st.advance(grid[ul], grid.dt(ul), yl, yl, dw.col(l), y.col(l + 1));
        if (!bounded(y.col(l + 1))) {
            y.rightCols(K - l).setZero();
            return false;
        }
    }
    return true;
}

std::size_t picard_path(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                        const Eigen::VectorXd& zeta, std::size_t iterations, Eigen::MatrixXd& y,
                        Eigen::MatrixXd* dist2, bool* finite) {
    check_shapes(pr, grid, dw, zeta);
    const auto K = static_cast<Eigen::Index>(grid.steps());
    y = zeta.replicate(1, K + 1);
    if (dist2) dist2->setZero(static_cast<Eigen::Index>(iterations), K + 1);
    if (finite) *finite = true;
    Eigen::MatrixXd next(pr.state_dim(), K + 1);
    Stepper st(pr);
    Eigen::VectorXd xl;
    for (std::size_t m = 0; m < iterations; ++m) {
        next.col(0) = zeta;
        for (Eigen::Index l = 0; l < K; ++l) {
            xl = y.col(l);
            const auto ul = static_cast<std::size_t>(l);
            st.advance(grid[ul], grid.dt(ul), xl, next.col(l), dw.col(l), next.col(l + 1));
        }
        if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceLimit) {
            if (finite) *finite = false;
            y.setZero();
            return m + 1;
        }
        if (dist2) dist2->row(static_cast<Eigen::Index>(m)) = 2.0 * (next - y).colwise().squaredNorm();
        const bool fixed = next == y;
        y.swap(next);
        if (fixed) return m + 1;
    }
    return iterations;
}

bool closed_form_path(const SdeProblem& pr, const TimeGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& dw,
                      const Eigen::VectorXd& zeta, Eigen::MatrixXd& y) {
    require(pr.g_linear.has_value() && pr.h_const.has_value(), Errc::invalid_argument,
            "closed form needs constant G and H");
    check_shapes(pr, grid, dw, zeta);
    const auto K = static_cast<Eigen::Index>(grid.steps());
    y.resize(pr.state_dim(), K + 1);
    y.col(0) = zeta;
    const Eigen::MatrixXd& h = pr.h_const->m;
    Eigen::MatrixXd e;
    double e_dt = -1.0;
    Eigen::VectorXd tmp;
    for (Eigen::Index l = 0; l < K; ++l) {
        const double dt = grid.dt(static_cast<std::size_t>(l));
        if (std::abs(dt - e_dt) > 1e-15 * std::max(1.0, dt)) {
            e = op_exp_left(*pr.g_linear, dt).m;
            e_dt = dt;
        }
        tmp.noalias() = h * dw.col(l);
        tmp += y.col(l);
        y.col(l + 1).noalias() = e * tmp;
        if (!bounded(y.col(l + 1))) {
            y.rightCols(K - l).setZero();
            return false;
        }
    }
    return true;
}

Eigen::MatrixXd aggregate_increments(const Eigen::Ref<const Eigen::MatrixXd>& dw, std::size_t stride) {
    const auto s = static_cast<Eigen::Index>(stride);
    require(stride >= 1 && dw.cols() % s == 0, Errc::invalid_argument, "stride must divide the step count");
    Eigen::MatrixXd out(dw.rows(), dw.cols() / s);
    for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) = dw.middleCols(j * s, s).rowwise().sum();
    return out;
}

// --- ensembles ----------------------------------------------------------------------------

const char* to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::picard: return "picard";
        case Scheme::euler: return "euler";
        case Scheme::closed_form: return "closed_form";
    }
    return "unknown";
}

double SolutionEnsemble::b2inf() const { return mean_norm2.size() ? std::sqrt(mean_norm2.maxCoeff()) : 0.0; }

double b2inf_norm(const std::vector<Eigen::MatrixXd>& paths) {
    require(!paths.empty(), Errc::invalid_argument, "empty ensemble");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(paths.front().cols());
    for (const auto& x : paths) {
        require(x.cols() == acc.size(), Errc::dimension_mismatch, "paths on different grids");
        acc += 2.0 * x.colwise().squaredNorm().transpose();
    }
    return std::sqrt(acc.maxCoeff() / static_cast<double>(paths.size()));
}

namespace {

template <class Solve>
SolutionEnsemble run_ensemble(const SdeProblem& pr, const PathEnsemble& ens, Scheme scheme, Solve solve, int threads) {
    const auto K = static_cast<Eigen::Index>(ens.grid().steps());
    const auto acc = mc_moments(
        ens.replicas(), K + 2,
        [&] {
            return [&, buf = PathBuffer{}, zeta = Eigen::VectorXd{}, y = Eigen::MatrixXd{}](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                pr.zeta.sample(ens.seed(), i, zeta);
                const bool ok = solve(buf.dw, zeta, y);
                out.head(K + 1) = 2.0 * y.colwise().squaredNorm().transpose();
                out[K + 1] = ok ? 0.0 : 1.0;
            };
        },
        threads);
    SolutionEnsemble s;
    s.scheme = scheme;
    s.times = ens.grid().points();
    s.mean_norm2 = acc.mean().head(K + 1);
    s.mean_norm2_se = acc.std_error().head(K + 1);
    s.replicas = acc.count();
    s.diverged = static_cast<std::size_t>(std::llround(acc.mean()[K + 1] * static_cast<double>(acc.count())));
    return s;
}

void require_grid(const SdeProblem& pr, const PathEnsemble& ens) {
    require(ens.grid().points() == pr.grid.points(), Errc::invalid_argument, "noise ensemble grid differs");
    require(ens.level() == pr.level && ens.dim() == pr.u.dim(), Errc::dimension_mismatch, "noise ensemble shape");
}

}  // namespace

SolutionEnsemble euler_maruyama(const SdeProblem& pr, const PathEnsemble& ens, int threads) {
    require_grid(pr, ens);
    return run_ensemble(
        pr, ens, Scheme::euler,
        [&](const Eigen::MatrixXd& dw, const Eigen::VectorXd& z, Eigen::MatrixXd& y) {
            return euler_path(pr, ens.grid(), dw, z, y);
        },
        threads);
}

SolutionEnsemble linear_closed_form(const SdeProblem& pr, const PathEnsemble& ens, int threads) {
    require_grid(pr, ens);
    return run_ensemble(
        pr, ens, Scheme::closed_form,
        [&](const Eigen::MatrixXd& dw, const Eigen::VectorXd& z, Eigen::MatrixXd& y) {
            return closed_form_path(pr, ens.grid(), dw, z, y);
        },
        threads);
}

SolutionEnsemble picard_solve(const SdeProblem& pr, const PathEnsemble& ens, std::size_t m_max, double tol,
                              int threads, bool throw_on_failure) {
    require_grid(pr, ens);
    require(m_max >= 1 && tol > 0.0, Errc::invalid_argument, "picard needs m_max >= 1 and tol > 0");
    const auto K = static_cast<Eigen::Index>(ens.grid().steps());
    const auto M = static_cast<Eigen::Index>(m_max);
    const auto acc = mc_moments(
        ens.replicas(), M * (K + 1),
        [&] {
            return [&, buf = PathBuffer{}, zeta = Eigen::VectorXd{}, y = Eigen::MatrixXd{}, d2 = Eigen::MatrixXd{}](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                pr.zeta.sample(ens.seed(), i, zeta);
                bool finite = true;
                picard_path(pr, ens.grid(), buf.dw, zeta, m_max, y, &d2, &finite);
                if (!finite) d2.setConstant(std::numeric_limits<double>::infinity());
                for (Eigen::Index m = 0; m < M; ++m) out.segment(m * (K + 1), K + 1) = d2.row(m).transpose();
            };
        },
        threads);

    std::vector<double> dist;
    std::size_t used = m_max;
    bool converged = false;
    for (Eigen::Index m = 0; m < M; ++m) {
        const double d = std::sqrt(acc.mean().segment(m * (K + 1), K + 1).maxCoeff());
        dist.push_back(d);
        if (d < tol) {
            used = static_cast<std::size_t>(m) + 1;
            converged = true;
            break;
        }
    }
    if (!converged && throw_on_failure) {
        std::ostringstream os;
        os << "picard iteration did not reach tol " << tol << " in " << m_max << " steps; distances:";
        for (double d : dist) os << ' ' << d;
        throw CdError(Errc::non_convergence, os.str());
    }
    SolutionEnsemble s = run_ensemble(
        pr, ens, Scheme::picard,
        [&](const Eigen::MatrixXd& dw, const Eigen::VectorXd& z, Eigen::MatrixXd& y) {
            bool finite = true;
            picard_path(pr, ens.grid(), dw, z, used, y, nullptr, &finite);
            return finite;
        },
        threads);
    s.iterations = used;
    s.converged = converged;
    s.distances = std::move(dist);
    return s;
}

// --- checks -------------------------------------------------------------------------------

CheckGroup lipschitz_validate(const SdeProblem& pr, std::size_t samples, std::uint64_t seed) {
    require(samples >= 1, Errc::invalid_argument, "sample_count must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(pr.grid.start(), pr.grid.end());
    const double scales[] = {1e-2, 1.0, 1e2, 1e4};
    const Eigen::Index d = pr.state_dim();
    Eigen::VectorXd x(d), y(d), gx, gy;
    Eigen::MatrixXd hx, hy;
    auto hs = [&pr](const Eigen::MatrixXd& m) {
        return std::sqrt(hs_norm2(RealizedOp{pr.level, pr.n, pr.u.dim(), m}));
    };
    double lip = 0.0, growth = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double s = scales[i % 4];
        const double t = unif(rng);
        for (Eigen::Index k = 0; k < d; ++k) x[k] = s * gauss(rng);
        const double sep = (i / 4) % 2 == 0 ? s : 1e-3 * s;
        for (Eigen::Index k = 0; k < d; ++k) y[k] = x[k] + sep * gauss(rng);
        pr.g(t, x, gx);
        pr.g(t, y, gy);
        pr.h(t, x, hx);
        pr.h(t, y, hy);
        const double dxy = norm(x - y);
        if (dxy > 0.0) lip = std::max(lip, (norm(gx - gy) + hs(hx - hy)) / dxy);
        growth = std::max(growth, (vec_norm2(gy) + hs_norm2(RealizedOp{pr.level, pr.n, pr.u.dim(), hy})) /
                                      (1.0 + vec_norm2(y)));
    }
    const double k = pr.k_const;
    CheckGroup g;
    g.add("lipschitz", lip <= k * (1.0 + 1e-9)).set("max_ratio", lip).set("k", k).set("samples", double(samples));
    g.add("linear_growth", growth <= k * k * (1.0 + 1e-9))
        .set("max_ratio", growth)
        .set("k_squared", k * k)
        .set("samples", double(samples));
    return g;
}

CheckGroup picard_checks(const SdeProblem& pr, const PathEnsemble& ens, std::size_t m_max, double tol, int threads) {
    require_grid(pr, ens);
    CheckGroup g;
    const SolutionEnsemble sol = picard_solve(pr, ens, m_max, tol, threads, false);
    g.add("converged", sol.converged && sol.diverged == 0)
        .set("iterations", double(sol.iterations))
        .set("final_distance", sol.distances.back())
        .set("tol", tol)
        .set("diverged", double(sol.diverged));

    const double span = pr.grid.end() - pr.grid.start();
    const double m2 = pr.u.max_sqrt_hs2();
    const double k2 = pr.k_const * pr.k_const;
    const double c1 = 2.0 * k2 * (span + m2);
    const bool drift_free = pr.drift_free();
    {
        const double d0 = sol.distances.front();
        bool ok = true;
        double fitted = 0.0;
        double log_shape = 0.0;  // log sqrt((c1 T)^m / m!)
        Check& c = g.add("factorial_decay", true, drift_free);
        for (std::size_t m = 0; m < sol.distances.size(); ++m) {
            if (m > 0) log_shape += 0.5 * (std::log(c1 * span) - std::log(double(m)));
            const double shape = std::exp(log_shape);
            const double dm = sol.distances[m];
            c.set("d" + std::to_string(m), dm);
            if (dm > 0.0) fitted = std::max(fitted, dm / shape);
            if (dm > 1.1 * d0 * shape) ok = false;
        }
        c.passed = ok;
        c.set("c1", c1).set("fitted_constant", fitted);
        if (!drift_free) c.note = "not asserted: nonzero drift p enters the increments";
    }
    {
        // Same grid: K + 1 Picard sweeps reproduce the forward recursion exactly.
        const std::size_t K = pr.grid.steps();
        const std::size_t n = std::min<std::size_t>(ens.replicas(), 256);
        const auto acc = mc_moments(
            n, 1,
            [&] {
                return [&, buf = PathBuffer{}, zeta = Eigen::VectorXd{}, y = Eigen::MatrixXd{}, e = Eigen::MatrixXd{}](
                           std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                    ens.generate(i, buf);
                    pr.zeta.sample(ens.seed(), i, zeta);
                    picard_path(pr, ens.grid(), buf.dw, zeta, K + 1, y);
                    euler_path(pr, ens.grid(), buf.dw, zeta, e);
                    out[0] = (y - e).cwiseAbs().maxCoeff();
                };
            },
            threads);
        g.add("fixed_point_is_euler", acc.mean()[0] <= 1e-12)
            .set("mean_max_abs_diff", acc.mean()[0])
            .set("replicas", double(n));
    }
    {
        const Eigen::VectorXd& e = sol.mean_norm2;
        const double b2 = e.maxCoeff();
        const double bound = 3.0 * pr.zeta.mean_norm2() + 3.0 * k2 * span * (span + m2) * (1.0 + b2);
        const double worst = ((e.array() - bound) / sol.mean_norm2_se.array().max(1e-300)).maxCoeff();
        Check& c = g.add("a_priori_bound", (e.array() <= bound + 4.0 * sol.mean_norm2_se.array()).all(), drift_free);
        c.set("sup_mean_norm2", b2).set("bound", bound).set("worst_z", worst);
        if (!drift_free) c.note = "not asserted: nonzero drift p enters the increments";
    }
    return g;
}

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void require_strides(const TimeGrid& grid, const std::vector<std::size_t>& strides) {
    require(strides.size() >= 2, Errc::invalid_argument, "need at least two coarse grids");
    for (std::size_t s : strides) {
        require(s >= 1 && grid.steps() % s == 0, Errc::invalid_argument, "stride must divide the step count");
    }
}

}  // namespace

CheckGroup strong_order_study(const SdeProblem& pr, const PathEnsemble& fine, const std::vector<std::size_t>& strides,
                              int threads) {
    require_grid(pr, fine);
    require_strides(pr.grid, strides);
    const auto K = static_cast<Eigen::Index>(pr.grid.steps());
    std::vector<TimeGrid> coarse;
    std::vector<Eigen::Index> off_node;
    Eigen::Index dim = static_cast<Eigen::Index>(strides.size()) * (K + 1);
    for (std::size_t s : strides) {
        coarse.push_back(pr.grid.coarsen(s));
        off_node.push_back(dim);
        dim += K / static_cast<Eigen::Index>(s) + 1;
    }
    const auto acc = mc_moments(
        fine.replicas(), dim,
        [&] {
            return [&, buf = PathBuffer{}, zeta = Eigen::VectorXd{}, yf = Eigen::MatrixXd{}, yc = Eigen::MatrixXd{}](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                fine.generate(i, buf);
                pr.zeta.sample(fine.seed(), i, zeta);
                closed_form_path(pr, pr.grid, buf.dw, zeta, yf);
                for (std::size_t j = 0; j < strides.size(); ++j) {
                    const auto s = static_cast<Eigen::Index>(strides[j]);
                    euler_path(pr, coarse[j], aggregate_increments(buf.dw, strides[j]), zeta, yc);
                    const Eigen::Index base = static_cast<Eigen::Index>(j) * (K + 1);
                    for (Eigen::Index l = 0; l <= K; ++l) out[base + l] = vec_norm2(yf.col(l) - yc.col(l / s));
                    for (Eigen::Index c = 0; c < yc.cols(); ++c) out[off_node[j] + c] = vec_norm2(yf.col(c * s) - yc.col(c));
                }
            };
        },
        threads);

    CheckGroup g;
    Check& table = g.add("error_table", true, false);
    std::vector<double> ldt, lerr, lnode;
    const double span = pr.grid.end() - pr.grid.start();
    for (std::size_t j = 0; j < strides.size(); ++j) {
        const auto s = static_cast<Eigen::Index>(strides[j]);
        const double dt = span * static_cast<double>(s) / static_cast<double>(K);
        const double err = std::sqrt(acc.mean().segment(static_cast<Eigen::Index>(j) * (K + 1), K + 1).maxCoeff());
        const double node = std::sqrt(acc.mean().segment(off_node[j], K / s + 1).maxCoeff());
        const std::string tag = "K" + std::to_string(K / s);
        table.set("dt_" + tag, dt).set("err_" + tag, err).set("node_err_" + tag, node);
        ldt.push_back(std::log(dt));
        lerr.push_back(std::log(err));
        lnode.push_back(std::log(node));
    }
    const double sl = slope(ldt, lerr);
    g.add("strong_order", sl >= 0.35 && sl <= 0.65)
        .set("slope", sl)
        .set("node_slope", slope(ldt, lnode))
        .set("fine_steps", double(K))
        .set("replicas", double(acc.count()));
    return g;
}

CheckGroup uniqueness_study(const SdeProblem& pr, const PathEnsemble& fine, const std::vector<std::size_t>& strides,
                            std::size_t m_max, double tol, int threads) {
    require_grid(pr, fine);
    require_strides(pr.grid, strides);
    const SolutionEnsemble pic = picard_solve(pr, fine, m_max, tol, threads, false);
    const auto K = static_cast<Eigen::Index>(pr.grid.steps());
    std::vector<TimeGrid> coarse;
    std::vector<Eigen::Index> off;
    Eigen::Index dim = 0;
    for (std::size_t s : strides) {
        coarse.push_back(pr.grid.coarsen(s));
        off.push_back(dim);
        dim += K / static_cast<Eigen::Index>(s) + 1;
    }
    const auto acc = mc_moments(
        fine.replicas(), dim,
        [&] {
            return [&, buf = PathBuffer{}, zeta = Eigen::VectorXd{}, yp = Eigen::MatrixXd{}, yc = Eigen::MatrixXd{}](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                fine.generate(i, buf);
                pr.zeta.sample(fine.seed(), i, zeta);
                picard_path(pr, pr.grid, buf.dw, zeta, pic.iterations, yp);
                for (std::size_t j = 0; j < strides.size(); ++j) {
                    const auto s = static_cast<Eigen::Index>(strides[j]);
                    euler_path(pr, coarse[j], aggregate_increments(buf.dw, strides[j]), zeta, yc);
                    for (Eigen::Index c = 0; c < yc.cols(); ++c) out[off[j] + c] = vec_norm2(yp.col(c * s) - yc.col(c));
                }
            };
        },
        threads);
    CheckGroup g;
    Check& c = g.add("picard_vs_euler_shrinks", true);
    std::vector<std::pair<std::size_t, double>> d;
    for (std::size_t j = 0; j < strides.size(); ++j) {
        const auto s = static_cast<Eigen::Index>(strides[j]);
        const double v = std::sqrt(acc.mean().segment(off[j], K / s + 1).maxCoeff());
        d.emplace_back(strides[j], v);
        c.set("dist_K" + std::to_string(K / s), v);
    }
    std::sort(d.begin(), d.end());  // finest first
    for (std::size_t j = 0; j + 1 < d.size(); ++j) {
        if (!(d[j].second < d[j + 1].second)) c.passed = false;
    }
    c.set("picard_iterations", double(pic.iterations)).set("finest_distance", d.front().second);
    return g;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), Errc::invalid_argument, "empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    double p = 1.0;
    if (lambda > 1e-3) {
        double sum = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            sum += (k % 2 ? 2.0 : -2.0) * term;
            if (term < 1e-16) break;
        }
        p = std::clamp(sum, 0.0, 1.0);
    }
    return {d, p};
}

CheckGroup restart_markov_check(const SdeProblem& pr, const PathEnsemble& ens, std::size_t l_mid, int threads,
                                double level) {
    require_grid(pr, ens);
    const std::size_t K = pr.grid.steps();
    require(l_mid < K, Errc::invalid_argument, "restart time must lie before the end of the window");
    require(ens.replicas() >= 4, Errc::invalid_argument, "restart check needs at least four replicas");
    const TimeGrid tail(std::vector<double>(pr.grid.points().begin() + static_cast<std::ptrdiff_t>(l_mid),
                                            pr.grid.points().end()));
    const PathEnsemble fresh(pr.grid, pr.u, pr.p, ens.seed() ^ 0x5bd1e9955bd1e995ULL, ens.replicas());
    const Eigen::Index D = pr.state_dim();
    const auto mid = static_cast<Eigen::Index>(l_mid);
    const auto kk = static_cast<Eigen::Index>(K);
    const std::size_t half = ens.replicas() / 2;
    const Eigen::MatrixXd v = mc_collect(
        ens.replicas(), 1 + D,
        [&] {
            return [&, buf = PathBuffer{}, buf2 = PathBuffer{}, zeta = Eigen::VectorXd{}, y = Eigen::MatrixXd{},
                    y2 = Eigen::MatrixXd{}](std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                pr.zeta.sample(ens.seed(), i, zeta);
                euler_path(pr, pr.grid, buf.dw, zeta, y);
                const Eigen::VectorXd z = y.col(mid);
                euler_path(pr, tail, buf.dw.rightCols(kk - mid), z, y2);
                out[0] = (y2 - y.rightCols(kk - mid + 1)).cwiseAbs().maxCoeff();
                if (i < half) {
                    out.tail(D) = y.col(kk);
                } else {
                    fresh.generate(i, buf2);
                    euler_path(pr, tail, buf2.dw.rightCols(kk - mid), z, y2);
                    out.tail(D) = y2.col(kk - mid);
                }
            };
        },
        threads);
    CheckGroup g;
    const double dev = v.col(0).maxCoeff();
    g.add("pathwise_restart", dev <= 1e-12).set("max_abs_deviation", dev).set("t_mid", pr.grid[l_mid]);
    double min_p = 1.0, max_d = 0.0;
    const auto h = static_cast<Eigen::Index>(half);
    for (Eigen::Index c = 0; c < D; ++c) {
        std::vector<double> a(static_cast<std::size_t>(h)), b(static_cast<std::size_t>(v.rows() - h));
        for (Eigen::Index i = 0; i < h; ++i) a[static_cast<std::size_t>(i)] = v(i, 1 + c);
        for (Eigen::Index i = h; i < v.rows(); ++i) b[static_cast<std::size_t>(i - h)] = v(i, 1 + c);
        const KsResult r = ks_two_sample(std::move(a), std::move(b));
        min_p = std::min(min_p, r.p_value);
        max_d = std::max(max_d, r.statistic);
    }
    g.add("transition_law_ks", min_p >= level)
        .set("min_p_value", min_p)
        .set("max_statistic", max_d)
        .set("level", level)
        .set("coordinates", double(D));
    return g;
}

}  // namespace cdstoch
