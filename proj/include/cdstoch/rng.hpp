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

#include <array>
#include <cstdint>
#include <span>

namespace cdstoch {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept;
};

/// Standard normal stream for one (seed, replica, channel) triple. Each Philox block yields two
/// 53-bit uniforms and hence one Box-Muller pair; the stream position is the block index, so a
/// stream is reproducible independently of how replicas are scheduled.
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, std::uint64_t replica, std::uint32_t channel) noexcept;

    double next() noexcept;
    void fill(std::span<double> out) noexcept;

  private:
    Philox4x32::Key key_;
    std::uint32_t replica_;
    std::uint32_t channel_;
    std::uint64_t index_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Channel assignment for per-replica streams.
namespace channel {
inline constexpr std::uint32_t xi0 = 0;
inline constexpr std::uint32_t xi1 = 1;
inline constexpr std::uint32_t zeta = 2;
inline constexpr std::uint32_t extra = 3;
}  // namespace channel

}  // namespace cdstoch
