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
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdstoch/linops.hpp"
#include "cdstoch/paths.hpp"

namespace cdstoch {

/// Bad configuration or usage; the message starts with the offending key.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct BlockSpec {
    std::vector<double> a;  ///< 2^r coefficients of a_j
    std::vector<double> b;  ///< row-major d x d matrix B_j
};

/// Run configuration. File format: one `key = value` per line, `#` starts a comment, lists
/// are whitespace separated, matrices are row-major lists. See configs/default.cfg.
struct RunConfig {
    int level = 1;
    std::size_t n = 1;  ///< driver components
    std::size_t h = 1;  ///< output components of the configured integrand
    std::vector<BlockSpec> u0{{{1.0, 0.0}, {1.0}}};
    std::vector<BlockSpec> u1;  ///< empty: A_r-valued driver
    std::vector<double> drift_re{0.0, 0.0};
    std::vector<double> drift_im{0.0, 0.0};
    double a = 0.0;
    double b = 1.0;
    std::size_t grid = 256;
    std::size_t replicas = 100000;
    std::uint64_t seed = 20261016;
    std::vector<std::string> experiments{"all"};

    std::size_t integral_grid = 32;
    std::size_t sde_replicas = 10000;
    std::vector<std::size_t> sde_grids{16, 32, 64, 128, 256};
    std::size_t picard_m_max = 40;
    double picard_tol = 1e-8;
    double ks_level = 0.01;
    double continuity_eps = 0.5;
    std::size_t export_paths = 0;

    [[nodiscard]] AlgebraLevel algebra_level() const { return AlgebraLevel(level); }
    /// Throws ConfigError naming the offending key when the covariance is invalid.
    [[nodiscard]] ComplexCovariance covariance() const;
    [[nodiscard]] CdVector drift() const;
    [[nodiscard]] TimeGrid time_grid() const { return TimeGrid::uniform(a, b, grid); }

    /// Full consistency check (dimensions, covariance validity, ranges).
    void validate() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace cdstoch
