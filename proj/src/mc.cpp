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
#include "cdstoch/mc.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace cdstoch {

namespace {
std::atomic<int> g_default_threads{0};
}

int resolve_threads(std::optional<int> requested) {
    if (requested && *requested > 0) return *requested;
    if (const char* env = std::getenv("CD_STOCHASTIC_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_default_threads(int threads) { g_default_threads.store(threads); }

int default_threads() {
    const int t = g_default_threads.load();
    return t > 0 ? t : resolve_threads();
}

void MomentAccumulator::add(const Eigen::Ref<const Eigen::VectorXd>& x) {
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_.array() += delta.array() * (x - mean_).array();
}

MomentAccumulator MomentAccumulator::merge(const MomentAccumulator& a, const MomentAccumulator& b) {
    if (a.n_ == 0) return b;
    if (b.n_ == 0) return a;
    MomentAccumulator out;
    out.n_ = a.n_ + b.n_;
    const double na = static_cast<double>(a.n_), nb = static_cast<double>(b.n_), n = static_cast<double>(out.n_);
    const Eigen::VectorXd delta = b.mean_ - a.mean_;
    out.mean_ = a.mean_ + delta * (nb / n);
    out.m2_ = a.m2_ + b.m2_ + delta.cwiseProduct(delta) * (na * nb / n);
    return out;
}

Eigen::VectorXd MomentAccumulator::variance() const {
    if (n_ < 2) return Eigen::VectorXd::Zero(mean_.size());
    return m2_ / static_cast<double>(n_ - 1);
}

Eigen::VectorXd MomentAccumulator::std_error() const {
    if (n_ == 0) return Eigen::VectorXd::Zero(mean_.size());
    return (variance() / static_cast<double>(n_)).cwiseSqrt();
}

McEstimate McEstimate::from(double mean, double se, std::size_t n, double z) {
    return {mean, se, mean - z * se, mean + z * se, n};
}

bool McEstimate::within(double target, double k) const noexcept {
    return std::abs(estimate - target) <= k * std_error;
}

McReport McReport::from(const MomentAccumulator& acc, std::uint64_t seed) {
    McReport r;
    r.seed = seed;
    const Eigen::VectorXd se = acc.std_error();
    for (Eigen::Index i = 0; i < acc.mean().size(); ++i) {
        r.values.push_back(McEstimate::from(acc.mean()[i], se[i], acc.count()));
    }
    return r;
}

}  // namespace cdstoch
