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

#include "dsmdt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dsmdt/rng.hpp"

namespace dsmdt {

namespace {

double path_loss_variance(double distance, double fc)
{
    const double amp = kSpeedOfLight / (4.0 * std::numbers::pi * distance * fc);
    return amp * amp;
}

// Circular distance on a period-2 axis.
double circ_gap(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 2.0);
    return std::min(d, 2.0 - d);
}

bool well_separated(const RVector &x, double spacing)
{
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = i + 1; j < x.size(); ++j)
            if (circ_gap(x[i], x[j]) < spacing)
                return false;
    return true;
}

LinkPaths draw_link(Rng &rng, std::size_t L, double variance, bool bs_side, double spacing)
{
    LinkPaths link;
    link.gains.resize(static_cast<Eigen::Index>(L));
    link.tau.resize(static_cast<Eigen::Index>(L));
    link.omega.resize(static_cast<Eigen::Index>(L));
    link.psi.resize(static_cast<Eigen::Index>(L));
    if (bs_side)
        link.phi.resize(static_cast<Eigen::Index>(L));

    // Rejection sampling of the separated coordinate; 10k tries is far more
    // than any feasible spacing needs.
    for (int attempt = 0; attempt < 10000; ++attempt) {
        for (Eigen::Index l = 0; l < link.gains.size(); ++l) {
            link.gains[l] = rng.complex_normal(variance);
            link.tau[l] = rng.uniform();
            link.omega[l] = rng.uniform();
            link.psi[l] = rng.uniform();
            if (bs_side)
                link.phi[l] = rng.uniform();
        }
        if (spacing <= 0.0)
            return link;
        const bool ok = bs_side ? well_separated(link.phi, spacing) : well_separated(link.tau, spacing);
        if (ok)
            return link;
    }
    throw std::invalid_argument("sample_scenario: minimum separation is not achievable");
}

} // namespace

std::size_t ScenarioConfig::l2_for(std::size_t ue) const
{
    if (L2.empty())
        throw std::invalid_argument("ScenarioConfig: L2 is empty");
    return L2.size() == 1 ? L2.front() : L2.at(ue);
}

void ScenarioConfig::validate() const
{
    auto fail = [](const std::string &msg) { throw std::invalid_argument("invalid scenario config: " + msg); };
    if (M == 0 || N1 == 0 || N2 == 0 || K == 0 || P == 0 || Q == 0)
        fail("M, N1, N2, K, P, Q must be positive");
    if (L1 == 0)
        fail("L1 must be at least 1");
    if (L2.empty() || (L2.size() != 1 && L2.size() != K))
        fail("L2 must hold one value or one value per UE");
    if (std::any_of(L2.begin(), L2.end(), [](std::size_t v) { return v == 0; }))
        fail("every L2 must be at least 1");
    if (l2_init == 0)
        fail("l2_init must be at least 1");
    if (Q <= l2_init)
        fail("Q must exceed l2_init");
    if (M <= L1)
        fail("M must exceed L1");
    if (P <= l2_init)
        fail("P must exceed l2_init");
    if (!(carrier_freq > 0.0))
        fail("carrier_freq must be positive");
    if (!(dist_bs > 0.0) || !(dist_ue_min > 0.0) || dist_ue_max < dist_ue_min)
        fail("distances must be positive with dist_ue_min <= dist_ue_max");
    if (std::isnan(snr_db))
        fail("snr_db is NaN");
    if (min_separation < 0.0)
        fail("min_separation must be non-negative");
}

ScenarioConfig ScenarioConfig::paper() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::desk()
{
    ScenarioConfig c;
    c.M = 32;
    c.N1 = 8;
    c.N2 = 8;
    c.K = 4;
    c.P = 64;
    c.Q = 12;
    return c;
}

ScenarioConfig ScenarioConfig::preset(const std::string &name)
{
    if (name == "paper")
        return paper();
    if (name == "desk")
        return desk();
    throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
}

ChannelScenario sample_scenario(const ScenarioConfig &cfg, std::uint64_t seed)
{
    cfg.validate();
    const double spacing = cfg.min_separation / static_cast<double>(std::min(cfg.M, cfg.P));

    ChannelScenario s;
    s.bs_distance = cfg.dist_bs;
    {
        Rng rng(derive_seed(seed, {kScenarioStream, 0}));
        s.ris_bs = draw_link(rng, cfg.L1, path_loss_variance(cfg.dist_bs, cfg.carrier_freq), true, spacing);
    }
    for (std::size_t k = 0; k < cfg.K; ++k) {
        Rng rng(derive_seed(seed, {kScenarioStream, 1 + k}));
        const double d = rng.uniform(cfg.dist_ue_min, cfg.dist_ue_max);
        s.ue_distance.push_back(d);
        s.ue_ris.push_back(draw_link(rng, cfg.l2_for(k), path_loss_variance(d, cfg.carrier_freq), false, spacing));
    }
    return s;
}

CMatrix sample_ris_config(std::size_t N, std::size_t Q, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, {kRisStream}));
    CMatrix theta(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(Q));
    for (Eigen::Index q = 0; q < theta.cols(); ++q)
        for (Eigen::Index n = 0; n < theta.rows(); ++n)
            theta(n, q) = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
    return theta;
}

Tensor3 add_noise(const Tensor3 &z, double variance, std::uint64_t seed)
{
    if (variance < 0.0)
        throw std::invalid_argument("add_noise: variance must be non-negative");
    Tensor3 out = z;
    if (variance == 0.0)
        return out;
    Rng rng(seed);
    for (Eigen::Index i = 0; i < out.data().size(); ++i)
        out.data()[i] += rng.complex_normal(variance);
    return out;
}

NoisyTensor apply_awgn(const Tensor3 &z, double snr_db, std::uint64_t seed)
{
    const double energy = z.squared_norm();
    if (!(energy > 0.0))
        throw std::invalid_argument("apply_awgn: signal tensor has zero energy");
    if (std::isinf(snr_db) && snr_db > 0.0)
        return {z, 0.0};
    const double variance = energy / (static_cast<double>(z.size()) * std::pow(10.0, snr_db / 10.0));
    return {add_noise(z, variance, seed), variance};
}

double common_noise_variance(const std::vector<Tensor3> &noiseless, double snr_db)
{
    if (noiseless.empty())
        throw std::invalid_argument("common_noise_variance: no tensors");
    if (std::isinf(snr_db) && snr_db > 0.0)
        return 0.0;
    double power = 0.0;
    for (const auto &z : noiseless)
        power += z.squared_norm() / static_cast<double>(z.size());
    power /= static_cast<double>(noiseless.size());
    if (!(power > 0.0))
        throw std::invalid_argument("common_noise_variance: signal has zero energy");
    return power / std::pow(10.0, snr_db / 10.0);
}

std::vector<Tensor3> noiseless_measurements(const ChannelScenario &scenario, const CMatrix &theta,
                                            const ArrayDims &dims)
{
    std::vector<Tensor3> out;
    out.reserve(scenario.users());
    for (const auto &ue : scenario.ue_ris)
        out.push_back(synth_measurement(map_cascaded(scenario.ris_bs, ue, dims.N()), theta, dims));
    return out;
}

MeasurementSet generate_measurements(const ScenarioConfig &cfg, std::uint64_t seed)
{
    MeasurementSet ms;
    ms.dims = cfg.dims();
    ms.scenario = sample_scenario(cfg, seed);
    ms.theta = sample_ris_config(cfg.N1 * cfg.N2, cfg.Q, seed);
    auto clean = noiseless_measurements(ms.scenario, ms.theta, ms.dims);
    ms.noise_variance = common_noise_variance(clean, cfg.snr_db);
    ms.tensors.reserve(clean.size());
    for (std::size_t k = 0; k < clean.size(); ++k)
        ms.tensors.push_back(add_noise(clean[k], ms.noise_variance, derive_seed(seed, {kNoiseStream, k})));
    return ms;
}

} // namespace dsmdt
