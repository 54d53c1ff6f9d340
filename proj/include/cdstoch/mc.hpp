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
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace cdstoch {

/// Replicas per reduction chunk. Chunks are summed sequentially and then combined in a fixed
/// pairwise tree, so results do not depend on the number of workers.
inline constexpr std::size_t kChunkSize = 512;

/// Worker count: explicit value if positive, else CD_STOCHASTIC_THREADS, else hardware
/// concurrency.
int resolve_threads(std::optional<int> requested = std::nullopt);
/// Process-wide default used when a call passes threads <= 0.
void set_default_threads(int threads);
int default_threads();

/// Running mean and centered second moment of a fixed-length vector (Chan et al. merge).
class MomentAccumulator {
  public:
    MomentAccumulator() = default;
    explicit MomentAccumulator(Eigen::Index dim) : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

    void add(const Eigen::Ref<const Eigen::VectorXd>& x);
    static MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b);

    [[nodiscard]] std::size_t count() const noexcept { return n_; }
    [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
    /// Unbiased sample variance.
    [[nodiscard]] Eigen::VectorXd variance() const;
    /// Standard error of the mean.
    [[nodiscard]] Eigen::VectorXd std_error() const;

  private:
    std::size_t n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::VectorXd m2_;
};

namespace detail {

/// Runs body(chunk_index, worker_state) for every chunk on a small pool; each worker builds
/// its own state with make_state().
template <class MakeState, class Body>
void for_each_chunk(std::size_t chunks, int threads, MakeState make_state, Body body) {
    const int workers = std::max(1, std::min<int>(threads > 0 ? threads : default_threads(), static_cast<int>(chunks)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        try {
            auto state = make_state();
            for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) body(c, state);
        } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(chunks);
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers - 1));
        for (int w = 1; w < workers; ++w) pool.emplace_back(run);
        run();
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

template <class T, class Merge>
T tree_reduce(std::vector<T>& parts, Merge merge) {
    std::size_t width = parts.size();
    while (width > 1) {
        const std::size_t half = (width + 1) / 2;
        for (std::size_t i = 0; i + half < width; ++i) parts[i] = merge(parts[i], parts[i + half]);
        width = half;
    }
    return parts.front();
}

}  // namespace detail

/// Monte Carlo mean/variance of a per-replica vector. make_worker() returns a callable
/// f(replica, Eigen::Ref<VectorXd> out) with private scratch; it must write all dim entries.
template <class MakeWorker>
MomentAccumulator mc_moments(std::size_t replicas, Eigen::Index dim, MakeWorker make_worker, int threads = 0) {
    const std::size_t chunks = std::max<std::size_t>(1, (replicas + kChunkSize - 1) / kChunkSize);
    std::vector<MomentAccumulator> parts(chunks, MomentAccumulator(dim));
    detail::for_each_chunk(
        chunks, threads, make_worker, [&](std::size_t c, auto& worker) {
            Eigen::VectorXd value(dim);
            MomentAccumulator acc(dim);
            const std::size_t end = std::min(replicas, (c + 1) * kChunkSize);
            for (std::size_t i = c * kChunkSize; i < end; ++i) {
                worker(i, Eigen::Ref<Eigen::VectorXd>(value));
                acc.add(value);
            }
            parts[c] = std::move(acc);
        });
    return detail::tree_reduce(parts, &MomentAccumulator::merge);
}

/// Per-replica values gathered into a replicas x dim matrix (row i = replica i).
template <class MakeWorker>
Eigen::MatrixXd mc_collect(std::size_t replicas, Eigen::Index dim, MakeWorker make_worker, int threads = 0) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(replicas), dim);
    const std::size_t chunks = std::max<std::size_t>(1, (replicas + kChunkSize - 1) / kChunkSize);
    detail::for_each_chunk(chunks, threads, make_worker, [&](std::size_t c, auto& worker) {
        Eigen::VectorXd value(dim);
        const std::size_t end = std::min(replicas, (c + 1) * kChunkSize);
        for (std::size_t i = c * kChunkSize; i < end; ++i) {
            worker(i, Eigen::Ref<Eigen::VectorXd>(value));
            out.row(static_cast<Eigen::Index>(i)) = value.transpose();
        }
    });
    return out;
}

/// Scalar Monte Carlo summary with a two-sided interval.
struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t samples = 0;

    static McEstimate from(double mean, double se, std::size_t n, double z = 2.5758293035489);
    /// |estimate - target| <= k * std_error.
    [[nodiscard]] bool within(double target, double k) const noexcept;
};

/// Estimates for each coordinate of a vector quantity plus the generating seed.
struct McReport {
    std::vector<McEstimate> values;
    std::uint64_t seed = 0;

    static McReport from(const MomentAccumulator& acc, std::uint64_t seed);
};

/// z for a two-sided 0.99 interval.
inline constexpr double kZ99 = 2.5758293035489;

}  // namespace cdstoch
