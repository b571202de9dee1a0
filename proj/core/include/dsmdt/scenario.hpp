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

#include <cstdint>
#include <string>
#include <vector>

#include "dsmdt/channel.hpp"

namespace dsmdt {

inline constexpr double kSpeedOfLight = 299792458.0;

struct ScenarioConfig {
    std::size_t M = 64;
    std::size_t N1 = 16;
    std::size_t N2 = 16;
    std::size_t K = 8;
    std::size_t P = 128;
    std::size_t Q = 16;
    std::size_t L1 = 3;
    std::vector<std::size_t> L2{3}; // one entry (shared) or K entries
    double carrier_freq = 28e9;
    double dist_bs = 30.0;
    double dist_ue_min = 20.0;
    double dist_ue_max = 40.0;
    double snr_db = 10.0;
    std::size_t l2_init = 4; // assumed (over-estimated) UE-RIS path count

    // Minimum spacing between BS-side angles and between a UE's path delays,
    // as a multiple of 1/min(M, P). Zero samples freely.
    double min_separation = 0.0;

    [[nodiscard]] ArrayDims dims() const noexcept { return {P, M, N1, N2, Q}; }
    [[nodiscard]] std::size_t l2_for(std::size_t ue) const;

    // Throws std::invalid_argument describing the first violated constraint.
    void validate() const;

    // Simulation profile with M=64, N=16x16, K=8, P=128, Q=16.
    static ScenarioConfig paper();
    // Reduced profile for fast runs: M=32, N=8x8, K=4, P=64, Q=12.
    static ScenarioConfig desk();
    // "paper" or "desk"; throws on anything else.
    static ScenarioConfig preset(const std::string &name);
};

struct MeasurementSet {
    ArrayDims dims;
    std::vector<Tensor3> tensors; // K noisy P x M x Q tensors
    CMatrix theta;                // N x Q RIS configurations
    double noise_variance = 0.0;
    ChannelScenario scenario;     // ground truth, for scoring only

    [[nodiscard]] std::size_t users() const noexcept { return tensors.size(); }
};

struct NoisyTensor {
    Tensor3 tensor;
    double noise_variance = 0.0;
};

// Path gains ~ CN(0, (c / (4 pi d f_c))^2); delays and angles ~ U[0,1).
[[nodiscard]] ChannelScenario sample_scenario(const ScenarioConfig &cfg, std::uint64_t seed);

// Unit-modulus entries with i.i.d. U[0, 2pi) phases.
[[nodiscard]] CMatrix sample_ris_config(std::size_t N, std::size_t Q, std::uint64_t seed);

// Adds CN(0, s2) noise with s2 = ||z||^2 / (numel * 10^(snr/10)).
// An infinite SNR returns z unchanged with s2 = 0. Zero-energy z throws.
[[nodiscard]] NoisyTensor apply_awgn(const Tensor3 &z, double snr_db, std::uint64_t seed);

// Adds CN(0, variance) noise to every element.
[[nodiscard]] Tensor3 add_noise(const Tensor3 &z, double variance, std::uint64_t seed);

// Noise variance shared by all UEs so that the mean per-element signal power
// over the K noiseless tensors sits snr_db above it.
[[nodiscard]] double common_noise_variance(const std::vector<Tensor3> &noiseless, double snr_db);

// Full synthesis: scenario, Theta, noiseless tensors, and noise. Every random
// draw comes from a sub-stream of `seed`, so the result is a pure function of
// (cfg, seed).
[[nodiscard]] MeasurementSet generate_measurements(const ScenarioConfig &cfg, std::uint64_t seed);

// Noiseless tensors for an existing scenario and Theta.
[[nodiscard]] std::vector<Tensor3> noiseless_measurements(const ChannelScenario &scenario, const CMatrix &theta,
                                                          const ArrayDims &dims);

} // namespace dsmdt
