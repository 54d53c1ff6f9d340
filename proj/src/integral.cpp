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
#include "cdstoch/integral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cdstoch {

namespace {

double hs2_realized(AlgebraLevel level, std::size_t in_n, const Eigen::MatrixXd& m) {
    double s = 0.0;
    for (std::size_t j = 0; j < in_n; ++j) {
        for (int part = 0; part < 2; ++part) {
            s += m.col(static_cast<Eigen::Index>(vec_index(level, j, part, 0))).squaredNorm();
        }
    }
    return s;
}

void require(bool ok, Errc code, const std::string& what) {
    if (!ok) throw CdError(code, what);
}

}  // namespace

// --- Integrand ----------------------------------------------------------------------------

Integrand::Integrand(AlgebraLevel level, std::size_t out_n, std::size_t in_n)
    : level_(level), out_n_(out_n), in_n_(in_n) {}

Integrand Integrand::constant(const RealizedOp& op) {
    Integrand s(op.level, op.out_n, op.in_n);
    s.constant_ = std::make_shared<const Eigen::MatrixXd>(op.m);
    s.eval_ = [m = s.constant_](const TimeGrid&, const Eigen::MatrixXd&, std::size_t, Eigen::MatrixXd& out) {
        out = *m;
    };
    return s;
}

Integrand Integrand::predictable(AlgebraLevel level, std::size_t out_n, std::size_t in_n, IntegrandFn fn,
                                 double bound) {
    Integrand s(level, out_n, in_n);
    s.bound_ = bound;
    s.eval_ = [fn = std::move(fn)](const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t l,
                                   Eigen::MatrixXd& out) {
        const PathPrefix prefix{grid, w.leftCols(static_cast<Eigen::Index>(l + 1)), l, nullptr};
        fn(prefix, out);
    };
    return s;
}

Integrand Integrand::step(AlgebraLevel level, std::size_t out_n, std::size_t in_n, TimeGrid partition,
                          std::vector<IntegrandFn> slots) {
    require(slots.size() == partition.steps(), Errc::invalid_argument, "one slot per partition interval required");
    Integrand s(level, out_n, in_n);
    const Eigen::Index rows = static_cast<Eigen::Index>(real_dim(level, out_n));
    const Eigen::Index cols = static_cast<Eigen::Index>(real_dim(level, in_n));
    s.eval_ = [partition = std::move(partition), slots = std::move(slots), rows, cols](
                  const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t l, Eigen::MatrixXd& out) {
        for (std::size_t k = 0; k <= partition.steps(); ++k) {
            (void)grid.index_of(partition[k]);  // throws when a partition point is off the grid
        }
        const double t = grid[l];
        const double tol = 1e-12 * std::max(1.0, std::abs(partition.end()));
        std::size_t j = partition.steps();
        for (std::size_t k = 0; k < partition.steps(); ++k) {
            if (t >= partition[k] - tol && t < partition[k + 1] - tol) {
                j = k;
                break;
            }
        }
        if (j == partition.steps()) {
            out.setZero(rows, cols);
            return;
        }
        const std::size_t at = grid.index_of(partition[j]);
        const PathPrefix prefix{grid, w.leftCols(static_cast<Eigen::Index>(at + 1)), at, nullptr};
        slots[j](prefix, out);
    };
    return s;
}

Integrand Integrand::anticipating(AlgebraLevel level, std::size_t out_n, std::size_t in_n, IntegrandFn fn) {
    Integrand s(level, out_n, in_n);
    s.adapted_ = false;
    s.eval_ = [fn = std::move(fn)](const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t l,
                                   Eigen::MatrixXd& out) {
        const PathPrefix prefix{grid, w.leftCols(static_cast<Eigen::Index>(l + 1)), l, &w};
        fn(prefix, out);
    };
    return s;
}

Integrand Integrand::sum(const Integrand& a, const Integrand& b) {
    require(a.level_ == b.level_ && a.out_n_ == b.out_n_ && a.in_n_ == b.in_n_, Errc::dimension_mismatch,
            "integrand sum");
    Integrand s(a.level_, a.out_n_, a.in_n_);
    s.adapted_ = a.adapted_ && b.adapted_;
    if (a.is_constant() && b.is_constant()) {
        s.constant_ = std::make_shared<const Eigen::MatrixXd>(*a.constant_ + *b.constant_);
    }
    s.eval_ = [a, b](const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t l, Eigen::MatrixXd& out) {
        Eigen::MatrixXd tmp;
        a.evaluate(grid, w, l, out);
        b.evaluate(grid, w, l, tmp);
        out += tmp;
    };
    return s;
}

void Integrand::evaluate(const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t l, Eigen::MatrixXd& out) const {
    eval_(grid, w, l, out);
    require(out.rows() == static_cast<Eigen::Index>(real_dim(level_, out_n_)) &&
                out.cols() == static_cast<Eigen::Index>(real_dim(level_, in_n_)),
            Errc::dimension_mismatch, "integrand produced a matrix of the wrong shape");
}

// --- integration --------------------------------------------------------------------------

void integrate(const Integrand& s, const TimeGrid& grid, const Eigen::MatrixXd& w, Eigen::MatrixXd& eta,
               StepTrace* trace, const ComplexCovariance* u) {
    const auto K = static_cast<Eigen::Index>(grid.steps());
    require(w.cols() == K + 1, Errc::dimension_mismatch, "path length does not match the grid");
    require(w.rows() == static_cast<Eigen::Index>(real_dim(s.level(), s.in_n())), Errc::dimension_mismatch,
            "path dimension does not match the integrand");
    const bool with_trace = trace != nullptr && u != nullptr;
    if (with_trace) {
        require(u->dim() == s.in_n() && u->level() == s.level(), Errc::dimension_mismatch, "covariance vs integrand");
        trace->int_f.setZero(K + 1);
        trace->int_hs2.setZero(K + 1);
    }
    eta.resize(static_cast<Eigen::Index>(real_dim(s.level(), s.out_n())), K + 1);
    eta.col(0).setZero();

    double const_f = 0.0, const_hs2 = 0.0;
    if (s.is_constant() && with_trace) {
        const_f = (s.constant_matrix() * u->injection()).squaredNorm();
        const_hs2 = hs2_realized(s.level(), s.in_n(), s.constant_matrix());
    }
    Eigen::MatrixXd scratch;
    for (Eigen::Index l = 0; l < K; ++l) {
        const Eigen::MatrixXd* m = &scratch;
        if (s.is_constant()) {
            m = &s.constant_matrix();
        } else {
            s.evaluate(grid, w, static_cast<std::size_t>(l), scratch);
        }
        eta.col(l + 1).noalias() = eta.col(l) + (*m) * (w.col(l + 1) - w.col(l));
        if (with_trace) {
            const double dt = grid.dt(static_cast<std::size_t>(l));
            const double f = s.is_constant() ? const_f : ((*m) * u->injection()).squaredNorm();
            const double hs2 = s.is_constant() ? const_hs2 : hs2_realized(s.level(), s.in_n(), *m);
            trace->int_f[l + 1] = trace->int_f[l] + f * dt;
            trace->int_hs2[l + 1] = trace->int_hs2[l] + hs2 * dt;
        }
    }
}

Eigen::VectorXd integrate_range(const Integrand& s, const TimeGrid& grid, const Eigen::MatrixXd& w, std::size_t from,
                                std::size_t to) {
    require(from <= to && to <= grid.steps(), Errc::invalid_argument, "integration range");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(real_dim(s.level(), s.out_n())));
    Eigen::MatrixXd m;
    for (std::size_t l = from; l < to; ++l) {
        s.evaluate(grid, w, l, m);
        acc.noalias() += m * (w.col(static_cast<Eigen::Index>(l + 1)) - w.col(static_cast<Eigen::Index>(l)));
    }
    return acc;
}

Eigen::MatrixXd path_matrix(const std::vector<CdVector>& path) {
    require(!path.empty(), Errc::invalid_argument, "empty path");
    Eigen::MatrixXd w(static_cast<Eigen::Index>(real_dim(path[0].level(), path[0].size())),
                      static_cast<Eigen::Index>(path.size()));
    for (std::size_t l = 0; l < path.size(); ++l) w.col(static_cast<Eigen::Index>(l)) = to_vec(path[l]);
    return w;
}

CdVector elementary_integral(const Integrand& s, const TimeGrid& grid, const std::vector<CdVector>& path, double t) {
    require(path.size() == grid.steps() + 1, Errc::dimension_mismatch, "path length does not match the grid");
    const std::size_t l = grid.index_of(t);
    return from_vec(s.level(), integrate_range(s, grid, path_matrix(path), 0, l));
}

CdVector predictable_integral(const Integrand& s, const TimeGrid& grid, const std::vector<CdVector>& path, double t) {
    return elementary_integral(s, grid, path, t);
}

// --- checks -------------------------------------------------------------------------------

namespace {

double max_abs_z(const MomentAccumulator& acc, Eigen::Index from, Eigen::Index count, bool* all_within,
                 double k = 4.0) {
    double worst = 0.0;
    const Eigen::VectorXd se = acc.std_error();
    for (Eigen::Index i = from; i < from + count; ++i) {
        const double m = acc.mean()[i];
        double z = 0.0;
        if (se[i] > 0.0) {
            z = std::abs(m) / se[i];
        } else if (m != 0.0) {
            z = std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, z);
    }
    if (all_within) *all_within = worst <= k;
    return worst;
}

/// Per-replica worker: regenerates the path and integrates it.
struct PathIntegrator {
    const Integrand& s;
    const PathEnsemble& ens;
    bool with_trace;
    PathBuffer buf;
    Eigen::MatrixXd eta;
    StepTrace trace;

    void run(std::size_t i) {
        ens.generate(i, buf);
        integrate(s, ens.grid(), buf.w, eta, with_trace ? &trace : nullptr, with_trace ? &ens.covariance() : nullptr);
    }
};

void require_compatible(const Integrand& s, const PathEnsemble& ens) {
    require(s.level() == ens.level() && s.in_n() == ens.dim(), Errc::dimension_mismatch,
            "integrand input must match the driving process");
}

}  // namespace

CheckGroup zero_mean_check(const Integrand& s, const PathEnsemble& ens, std::size_t l, int threads) {
    require_compatible(s, ens);
    require(l <= ens.grid().steps(), Errc::invalid_argument, "grid index out of range");
    const auto d = static_cast<Eigen::Index>(real_dim(s.level(), s.out_n()));
    const auto acc = mc_moments(
        ens.replicas(), d,
        [&] {
            return [pi = PathIntegrator{s, ens, false, {}, {}, {}}, l](std::size_t i,
                                                                       Eigen::Ref<Eigen::VectorXd> out) mutable {
                pi.run(i);
                out = pi.eta.col(static_cast<Eigen::Index>(l));
            };
        },
        threads);
    CheckGroup g;
    bool ok = false;
    const double z = max_abs_z(acc, 0, d, &ok);
    g.add("zero_mean", ok)
        .set("max_abs_z", z)
        .set("max_abs_mean", acc.mean().cwiseAbs().maxCoeff())
        .set("max_std_error", acc.std_error().maxCoeff())
        .set("replicas", static_cast<double>(acc.count()));
    return g;
}

CheckGroup isometry_check(const Integrand& s, const PathEnsemble& ens, std::size_t l, int threads) {
    require_compatible(s, ens);
    require(!ens.covariance().u1().has_value(), Errc::invalid_argument,
            "isometry check needs an A_r-valued driver (no i-part covariance)");
    const AlgebraLevel level = s.level();
    const auto dd = static_cast<Eigen::Index>(level.dim());
    auto check_lri = [level, dd, &s](const Eigen::MatrixXd& m) {
        for (std::size_t j = 0; j < s.out_n(); ++j) {
            for (std::size_t k = 0; k < s.in_n(); ++k) {
                const auto r_re = static_cast<Eigen::Index>(vec_index(level, j, 0, 0));
                const auto r_im = static_cast<Eigen::Index>(vec_index(level, j, 1, 0));
                const auto c_re = static_cast<Eigen::Index>(vec_index(level, k, 0, 0));
                const auto c_im = static_cast<Eigen::Index>(vec_index(level, k, 1, 0));
                if (!m.block(r_im, c_re, dd, dd).isZero(0.0) || !m.block(r_re, c_im, dd, dd).isZero(0.0)) {
                    throw CdError(Errc::invalid_argument, "non-L_{r,i} integrand (mixes real and i-parts)");
                }
            }
        }
    };
    if (s.is_constant()) check_lri(s.constant_matrix());

    const auto acc = mc_moments(
        ens.replicas(), 3,
        [&] {
            return [pi = PathIntegrator{s, ens, true, {}, {}, {}}, l, &s, &check_lri](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                pi.run(i);
                if (!s.is_constant() && i == 0) {
                    Eigen::MatrixXd m;
                    for (std::size_t k = 0; k < pi.ens.grid().steps(); ++k) {
                        s.evaluate(pi.ens.grid(), pi.buf.w, k, m);
                        check_lri(m);
                    }
                }
                const double lhs = pi.eta.col(static_cast<Eigen::Index>(l)).squaredNorm();
                const double rhs = pi.trace.int_f[static_cast<Eigen::Index>(l)];
                out << lhs, rhs, lhs - rhs;
            };
        },
        threads);
    const Eigen::VectorXd se = acc.std_error();
    const double diff = acc.mean()[2];
    CheckGroup g;
    g.add("isometry", std::abs(diff) <= 4.0 * se[2])
        .set("lhs", acc.mean()[0])
        .set("lhs_se", se[0])
        .set("rhs", acc.mean()[1])
        .set("rhs_se", se[1])
        .set("diff", diff)
        .set("diff_se", se[2])
        .set("combined_se", std::hypot(se[0], se[1]));
    return g;
}

CheckGroup bound_check(const Integrand& s, const PathEnsemble& ens, std::size_t l, int threads) {
    require_compatible(s, ens);
    const double m_u = ens.covariance().max_sqrt_hs2();
    const auto acc = mc_moments(
        ens.replicas(), 5,
        [&] {
            return [pi = PathIntegrator{s, ens, true, {}, {}, {}}, l, m_u](std::size_t i,
                                                                           Eigen::Ref<Eigen::VectorXd> out) mutable {
                pi.run(i);
                const auto li = static_cast<Eigen::Index>(l);
                const double m1 = vec_norm2(pi.eta.col(li));
                const double m2 = 2.0 * pi.trace.int_f[li];
                const double m3 = m_u * pi.trace.int_hs2[li];
                out << m1, m2, m3, m1 - m2, m3 - m1;
            };
        },
        threads);
    const Eigen::VectorXd se = acc.std_error();
    const Eigen::VectorXd& mean = acc.mean();
    CheckGroup g;
    g.add("m1_equals_m2", std::abs(mean[3]) <= 4.0 * se[3])
        .set("m1", mean[0])
        .set("m1_se", se[0])
        .set("m2", mean[1])
        .set("m2_se", se[1])
        .set("diff", mean[3])
        .set("diff_se", se[3]);
    g.add("m1_le_m3", mean[4] >= -4.0 * se[4])
        .set("m1", mean[0])
        .set("m3", mean[2])
        .set("m3_se", se[2])
        .set("gap", mean[4])
        .set("gap_se", se[4])
        .set("max_sqrt_hs2", m_u);
    return g;
}

CheckGroup martingale_check(const Integrand& s, const PathEnsemble& ens, std::size_t l1, std::size_t l2, int threads,
                            int bins) {
    require_compatible(s, ens);
    require(l1 < l2 && l2 <= ens.grid().steps(), Errc::invalid_argument, "need t1 < t2 on the grid");
    require(bins >= 1, Errc::invalid_argument, "bins must be positive");
    const auto d = static_cast<Eigen::Index>(real_dim(s.level(), s.out_n()));
    const Eigen::MatrixXd values = mc_collect(
        ens.replicas(), d + 1,
        [&] {
            return [pi = PathIntegrator{s, ens, false, {}, {}, {}}, l1, l2](std::size_t i,
                                                                            Eigen::Ref<Eigen::VectorXd> out) mutable {
                pi.run(i);
                const auto a = static_cast<Eigen::Index>(l1), b = static_cast<Eigen::Index>(l2);
                out[0] = pi.eta(0, a);
                out.tail(out.size() - 1) = pi.eta.col(b) - pi.eta.col(a);
            };
        },
        threads);

    const auto n = static_cast<std::size_t>(values.rows());
    CheckGroup g;
    MomentAccumulator all(d);
    for (std::size_t i = 0; i < n; ++i) all.add(values.row(static_cast<Eigen::Index>(i)).tail(d).transpose());
    bool ok_all = false;
    const double z_all = max_abs_z(all, 0, d, &ok_all);
    g.add("unconditional_mean", ok_all)
        .set("max_abs_z", z_all)
        .set("max_abs_mean", all.mean().cwiseAbs().maxCoeff());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) {
        return values(static_cast<Eigen::Index>(a), 0) < values(static_cast<Eigen::Index>(b), 0);
    });
    double z_bins = 0.0;
    bool ok_bins = true;
    const auto nb = static_cast<std::size_t>(bins);
    for (std::size_t b = 0; b < nb; ++b) {
        MomentAccumulator acc(d);
        for (std::size_t k = b * n / nb; k < (b + 1) * n / nb; ++k) {
            acc.add(values.row(static_cast<Eigen::Index>(order[k])).tail(d).transpose());
        }
        bool ok = false;
        z_bins = std::max(z_bins, max_abs_z(acc, 0, d, &ok));
        ok_bins = ok_bins && ok;
    }
    g.add("binned_conditional_mean", ok_bins).set("max_abs_z", z_bins).set("bins", static_cast<double>(bins));
    return g;
}

CheckGroup chebyshev_check(const Integrand& s, const PathEnsemble& ens, double beta, double alpha, int threads) {
    require_compatible(s, ens);
    require(alpha > 0.0 && beta > 0.0, Errc::invalid_argument, "alpha and beta must be positive");
    const double m2 = ens.covariance().max_sqrt_hs2();
    const double level = beta * std::sqrt(m2);
    const double doob_scale = 1.0 / (beta * beta * m2);
    const auto K = static_cast<Eigen::Index>(ens.grid().steps());
    const auto acc = mc_moments(
        ens.replicas(), 7,
        [&] {
            return [pi = PathIntegrator{s, ens, true, {}, {}, {}}, level, alpha, doob_scale, K](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                pi.run(i);
                const double sup_euclid = pi.eta.colwise().norm().maxCoeff();
                const double sup_norm = std::sqrt(2.0) * sup_euclid;
                const double end_norm = std::sqrt(vec_norm2(pi.eta.col(K)));
                const double int_f = pi.trace.int_f[K];
                const double a16 = sup_norm > level ? 1.0 : 0.0;
                const double s16 = pi.trace.int_hs2[K] > alpha ? 1.0 : 0.0;
                const double a26 = sup_euclid > level ? 1.0 : 0.0;
                out << a16, (end_norm > level ? 1.0 : 0.0), s16, a16 - s16, a26, int_f, a26 - doob_scale * int_f;
            };
        },
        threads);
    const Eigen::VectorXd& mean = acc.mean();
    const Eigen::VectorXd se = acc.std_error();
    const double b16 = alpha / (beta * beta) + mean[2];
    const double literal = mean[5] / (beta * beta);
    const double doob = doob_scale * mean[5];

    CheckGroup g;
    g.add("sup_norm_tail", mean[3] <= alpha / (beta * beta) + 4.0 * se[3])
        .set("p_sup", mean[0])
        .set("p_end", mean[1])
        .set("bound", b16)
        .set("slack_se", se[3])
        .set("alpha", alpha)
        .set("beta", beta);
    g.add("euclid_tail_scaled", mean[6] <= 4.0 * se[6])
        .set("p_sup", mean[4])
        .set("bound", doob)
        .set("slack_se", se[6])
        .set("e_int_f", mean[5]);
    // The unscaled bound beta^{-2} E int F dominates the scaled one only when max ||U_k^{1/2}||_2^2 >= 1.
    const bool applicable = m2 >= 1.0;
    Check& lit = g.add("euclid_tail_unscaled", mean[4] <= literal + 4.0 * se[4], applicable);
    lit.set("p_sup", mean[4]).set("bound", literal).set("slack_se", se[4]).set("max_sqrt_hs2", m2);
    if (!applicable) lit.note = "not asserted: max ||U_k^{1/2}||_2^2 < 1";
    return g;
}

CheckGroup stochastic_continuity_check(const Integrand& s, const PathEnsemble& ens, double eps,
                                       std::vector<std::size_t> separations, int threads) {
    require_compatible(s, ens);
    require(eps > 0.0, Errc::invalid_argument, "eps must be positive");
    const std::size_t K = ens.grid().steps();
    if (separations.empty()) {
        for (std::size_t sep = 1; sep <= K / 2; sep *= 2) separations.push_back(sep);
    }
    require(std::is_sorted(separations.begin(), separations.end()) && separations.front() >= 1 &&
                separations.back() <= K,
            Errc::invalid_argument, "separations must be ascending within the grid");
    std::vector<Eigen::Index> offset;
    Eigen::Index dim = 0;
    for (std::size_t sep : separations) {
        offset.push_back(dim);
        dim += static_cast<Eigen::Index>(K - sep + 1) + 1;  // one per start point plus the start average
    }
    const double eps2 = eps * eps;
    const auto acc = mc_moments(
        ens.replicas(), dim,
        [&] {
            return [pi = PathIntegrator{s, ens, false, {}, {}, {}}, &separations, &offset, K, eps2](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                pi.run(i);
                for (std::size_t j = 0; j < separations.size(); ++j) {
                    const std::size_t sep = separations[j];
                    double hits = 0.0;
                    for (std::size_t l = 0; l + sep <= K; ++l) {
                        const double d2 = vec_norm2(pi.eta.col(static_cast<Eigen::Index>(l + sep)) -
                                                    pi.eta.col(static_cast<Eigen::Index>(l)));
                        const double hit = d2 > eps2 ? 1.0 : 0.0;
                        out[offset[j] + static_cast<Eigen::Index>(l)] = hit;
                        hits += hit;
                    }
                    out[offset[j] + static_cast<Eigen::Index>(K - sep + 1)] = hits / static_cast<double>(K - sep + 1);
                }
            };
        },
        threads);

    CheckGroup g;
    const double span = ens.grid().end() - ens.grid().start();
    std::vector<double> p_sep(separations.size()), p_sup(separations.size());
    const Eigen::VectorXd se = acc.std_error();
    Check& table = g.add("tail_table", true, false);
    for (std::size_t j = 0; j < separations.size(); ++j) {
        const std::size_t sep = separations[j];
        const auto count = static_cast<Eigen::Index>(K - sep + 1);
        p_sep[j] = acc.mean().segment(offset[j], count).maxCoeff();
        p_sup[j] = std::max(p_sep[j], j > 0 ? p_sup[j - 1] : 0.0);
        const std::string tag = "s" + std::to_string(sep);
        table.set("delta_" + tag, span * static_cast<double>(sep) / static_cast<double>(K));
        table.set("p_" + tag, p_sep[j]);
        table.set("p_sup_" + tag, p_sup[j]);
        table.set("p_mean_" + tag, acc.mean()[offset[j] + count]);
        table.set("p_mean_se_" + tag, se[offset[j] + count]);
    }
    bool monotone = true;
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < separations.size(); ++j) {
        const double excess = p_sep[j] - p_sep[j + 1];
        const double slack = 2.0 * binomial_se(std::max(p_sep[j], p_sep[j + 1]), acc.count());
        worst = std::max(worst, excess - slack);
        if (excess > slack) monotone = false;
    }
    g.add("non_increasing", monotone).set("worst_excess_over_slack", worst).set("eps", eps);
    g.add("finest_below_0.01", p_sup.front() < 0.01).set("p_sup_finest", p_sup.front());
    return g;
}

CheckGroup refinement_check(const Integrand& s, const PathEnsemble& ens, int halvings, int threads) {
    require_compatible(s, ens);
    require(halvings >= 2, Errc::invalid_argument, "refinement study needs at least two halvings");
    const std::size_t K = ens.grid().steps();
    const std::size_t top = std::size_t{1} << halvings;
    require(K % top == 0, Errc::invalid_argument, "grid step count must be divisible by 2^halvings");
    std::vector<TimeGrid> grids;
    for (int j = 0; j <= halvings; ++j) grids.push_back(ens.grid().coarsen(std::size_t{1} << j));
    const auto H = static_cast<Eigen::Index>(halvings);
    const auto acc = mc_moments(
        ens.replicas(), 2 * H - 1,
        [&] {
            return [&, buf = PathBuffer{}, eta = Eigen::MatrixXd{}, wc = Eigen::MatrixXd{}](
                       std::size_t i, Eigen::Ref<Eigen::VectorXd> out) mutable {
                ens.generate(i, buf);
                std::vector<Eigen::VectorXd> ends;
                for (int j = 0; j <= halvings; ++j) {
                    const std::size_t stride = std::size_t{1} << j;
                    const auto cols = static_cast<Eigen::Index>(K / stride + 1);
                    wc.resize(buf.w.rows(), cols);
                    for (Eigen::Index c = 0; c < cols; ++c) wc.col(c) = buf.w.col(c * static_cast<Eigen::Index>(stride));
                    integrate(s, grids[static_cast<std::size_t>(j)], wc, eta);
                    ends.push_back(eta.col(cols - 1));
                }
                for (Eigen::Index j = 0; j < H; ++j) {
                    out[j] = vec_norm2(ends[static_cast<std::size_t>(j)] - ends[static_cast<std::size_t>(j + 1)]);
                }
                for (Eigen::Index j = 0; j + 1 < H; ++j) out[H + j] = out[j] - out[j + 1];
            };
        },
        threads);
    const Eigen::VectorXd se = acc.std_error();
    CheckGroup g;
    Check& table = g.add("mean_square_change", true, false);
    bool decreasing = true;
    for (Eigen::Index j = 0; j < H; ++j) {
        const std::string tag = "K" + std::to_string(K >> j) + "_vs_K" + std::to_string(K >> (j + 1));
        table.set(tag, acc.mean()[j]);
        table.set(tag + "_se", se[j]);
    }
    for (Eigen::Index j = 0; j + 1 < H; ++j) {
        if (acc.mean()[H + j] > 4.0 * se[H + j]) decreasing = false;
    }
    g.add("vanishing_under_refinement", decreasing)
        .set("finest", acc.mean()[0])
        .set("coarsest", acc.mean()[H - 1])
        .set("ratio_finest_to_coarsest", acc.mean()[H - 1] > 0 ? acc.mean()[0] / acc.mean()[H - 1] : 0.0);
    return g;
}

}  // namespace cdstoch
