// SPDX-License-Identifier: Apache-2.0
//
// dsmdt: channel estimation for RIS-aided multi-user MIMO-OFDM links
// Copyright (C) 2026 The dsmdt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dsmdt {

// SplitMix64 finalizer; used to derive independent stream seeds.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for a named sub-stream, e.g. derive_seed(trial_seed, {kNoiseStream, ue}).
// The result depends only on the inputs, never on the order streams are used.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal() { return normal_(engine_); }

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance);

    std::mt19937_64 &engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stream tags for derive_seed.
inline constexpr std::uint64_t kScenarioStream = 0x5CE0;
inline constexpr std::uint64_t kRisStream = 0x0715;
inline constexpr std::uint64_t kNoiseStream = 0x0015E;
inline constexpr std::uint64_t kTrialStream = 0x7121A1;
inline constexpr std::uint64_t kMisselectStream = 0x3155;

} // namespace dsmdt
