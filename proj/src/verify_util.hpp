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

// Helpers shared by the verification batteries.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>

#include "cdstoch/algebra.hpp"
#include "cdstoch/linops.hpp"
#include "cdstoch/rng.hpp"
#include "cdstoch/verify.hpp"

namespace cdstoch::vdetail {

/// Reproducible random inputs for a battery; stream (seed, tag) on the spare channel.
class Inputs {
  public:
    Inputs(std::uint64_t seed, std::uint64_t tag) : s_(seed, tag, channel::extra) {}

    double gauss() { return s_.next(); }
    /// Uniform on (lo, hi) through the normal CDF.
    double uniform(double lo, double hi) { return lo + (hi - lo) * 0.5 * std::erfc(-gauss() / std::sqrt(2.0)); }
    CdReal real(AlgebraLevel L, double scale = 1.0) {
        CdReal x(L);
        for (std::size_t k = 0; k < L.dim(); ++k) x[k] = scale * gauss();
        return x;
    }
    CdComplex complex(AlgebraLevel L, double scale = 1.0) { return {real(L, scale), real(L, scale)}; }
    CdVector vector(AlgebraLevel L, std::size_t n, double scale = 1.0) {
        CdVector v(L, n);
        for (std::size_t j = 0; j < n; ++j) v[j] = complex(L, scale);
        return v;
    }
    CdMatrix matrix(AlgebraLevel L, std::size_t rows, std::size_t cols, double scale = 1.0) {
        CdMatrix m(L, rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = real(L, scale);
        return m;
    }
    /// G G^T / d + eps I.
    Eigen::MatrixXd spd(std::size_t d, double eps = 0.2) {
        Eigen::MatrixXd g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = gauss();
        Eigen::MatrixXd s = g * g.transpose() / static_cast<double>(d);
        s += eps * Eigen::MatrixXd::Identity(g.rows(), g.cols());
        return 0.5 * (s + s.transpose());
    }
    /// a with a positive i_0 part and a smaller pure part (a usable covariance scalar).
    CdReal cov_scalar(AlgebraLevel L, double pure = 0.4) {
        CdReal a = real(L, pure / std::sqrt(static_cast<double>(std::max<std::size_t>(L.dim(), 1))));
        a[0] = uniform(0.5, 1.5);
        return a;
    }

  private:
    NormalStream s_;
};

class Stopwatch {
  public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_;
};

inline std::string case_prefix(std::size_t i) { return "case" + std::to_string(i) + "/"; }

/// Fixed seed offsets per battery so that batteries do not share streams.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1)); }

}  // namespace cdstoch::vdetail
