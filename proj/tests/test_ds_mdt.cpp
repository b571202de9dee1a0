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

#include <doctest.h>

#include <cmath>
#include <limits>

#include "dsmdt/ds_mdt.hpp"
#include "dsmdt/harness.hpp"
#include "dsmdt/metrics.hpp"
#include "dsmdt/rng.hpp"
#include "dsmdt/robust.hpp"

using namespace dsmdt;

namespace {

ScenarioConfig noiseless_desk()
{
    auto cfg = ScenarioConfig::desk();
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.min_separation = 2.0;
    return cfg;
}

double mean_nmse(const MeasurementSet &ms, const EstimateReport &rep)
{
    const auto truth = map_cascaded(ms.scenario, ms.dims.N());
    double e = 0.0;
    for (std::size_t k = 0; k < ms.users(); ++k)
        e += nmse(rep.ues[k].channel, channel_factors(truth[k], ms.dims));
    return e / static_cast<double>(ms.users());
}

UeEstimate fake_ue(double tau_shift, double gain_ratio)
{
    UeEstimate u;
    u.tau.resize(2, 3);
    u.tau << 0.1, 0.4, 0.7, 0.1 + 0.25, 0.4 + 0.25 + tau_shift, 0.7 + 0.25;
    u.beta.resize(2, 3);
    u.beta << 1.0, 2.0, 0.5, 3.0, 6.0 * gain_ratio, 1.5;
    return u;
}

} // namespace

TEST_CASE("reference is the strongest UE")
{
    const auto ms = generate_measurements(ScenarioConfig::desk(), 5);
    const auto ref = select_reference(ms);
    for (std::size_t k = 0; k < ms.users(); ++k)
        CHECK(ms.tensors[k].squared_norm() <= ms.tensors[ref].squared_norm());

    MeasurementSet tie = ms;
    tie.tensors[2] = tie.tensors[0];
    tie.tensors[1] = tie.tensors[0];
    tie.tensors[3] = tie.tensors[0];
    CHECK(select_reference(tie) == 0);
    CHECK_THROWS_AS((void)select_reference(MeasurementSet{}), std::invalid_argument);
}

TEST_CASE("noiseless recovery on separated desk scenarios")
{
    const auto cfg = noiseless_desk();
    for (Algorithm algo : {Algorithm::dsmdt_kpn, Algorithm::dsmdt}) {
        CAPTURE(to_string(algo));
        for (std::uint64_t t = 0; t < 4; ++t) {
            CAPTURE(t);
            const auto ms = generate_measurements(cfg, derive_seed(31, {kTrialStream, t}));
            const auto rep = run_ds_mdt(ms, options_for(algo, cfg, {}));
            REQUIRE(rep.ok);
            CHECK(rep.l1_hat == cfg.L1);
            for (std::size_t k = 0; k < ms.users(); ++k)
                CHECK(rep.ues[k].l2_hat == ms.scenario.ue_ris[k].paths());
            CHECK(to_db(mean_nmse(ms, rep)) < -60.0);
            CHECK(rep.valid);
            CHECK_FALSE(rep.fallback_used);
        }
    }
}

TEST_CASE("common AoD estimate")
{
    const auto cfg = noiseless_desk();
    const auto ms = generate_measurements(cfg, 77);
    const auto aod = estimate_common_aod(ms, std::nullopt);
    REQUIRE(aod.l1 == cfg.L1);
    RVector truth = ms.scenario.ris_bs.phi;
    std::sort(truth.begin(), truth.end());
    for (Eigen::Index l = 0; l < truth.size(); ++l)
        CHECK(std::abs(aod.phi[l] - truth[l]) < 1e-6);
    CHECK_FALSE(aod.degraded);

    const auto fixed = estimate_common_aod(ms, std::size_t{2});
    CHECK(fixed.l1 == 2);
    CHECK(fixed.phi.size() == 2);
}

TEST_CASE("non-reference delays follow the reference offsets")
{
    const auto cfg = noiseless_desk();
    const auto ms = generate_measurements(cfg, 123);
    const auto rep = run_ds_mdt(ms, options_for(Algorithm::dsmdt, cfg, {}));
    REQUIRE(rep.ok);
    REQUIRE_FALSE(rep.fallback_used);
    for (std::size_t k = 0; k < ms.users(); ++k) {
        const auto &tau = rep.ues[k].tau;
        REQUIRE(tau.rows() == static_cast<Eigen::Index>(cfg.L1));
        for (Eigen::Index r = 0; r < tau.rows(); ++r)
            for (Eigen::Index c = 0; c < tau.cols(); ++c) {
                const double d = wrap_centered(tau(r, c) - tau(rep.anchor_row, c) - rep.tau_offsets[r], 2.0);
                // Reference rows come from separate searches; the others copy the offsets.
                CHECK(std::abs(d) < (k == rep.reference ? 1e-4 : 1e-12));
            }
    }
}

TEST_CASE("structure inconsistency")
{
    RMatrix x(2, 3);
    x << 0.1, 0.5, 0.9, 0.3, 0.7, 1.1;
    CHECK(structure_inconsistency(x) == doctest::Approx(0.0).scale(1.0));
    x(1, 2) = 1.2; // d = {-0.2, -0.2, -0.3}; mean -0.2333
    CHECK(structure_inconsistency(x) == doctest::Approx(0.0666666667));

    // Wrapped: 1.95 and -0.05 are the same delay on a period of two.
    RMatrix w(2, 2);
    w << 0.0, 1.95, 0.1, 0.05;
    CHECK(structure_inconsistency(w, 2.0) < 1e-12);
    CHECK(structure_inconsistency(w) == doctest::Approx(1.0));

    CHECK(structure_inconsistency(RMatrix(1, 3)) == 0.0);

    CMatrix beta(2, 2);
    beta << 1.0, 2.0, 4.0, 8.0;
    CHECK(gain_structure_inconsistency(beta) < 1e-12);
    beta(1, 1) = 0.0;
    CHECK(std::isinf(gain_structure_inconsistency(beta)));
}

TEST_CASE("validity indicator vote")
{
    const double eps = 0.1;
    EstimateReport rep;
    rep.ues = {fake_ue(0.0, 1.0), fake_ue(0.0, 1.0), fake_ue(0.5, 1.0), fake_ue(0.0, 2.0)};
    CHECK(validity_indicator(rep, eps, 2));
    CHECK(rep.reliable_users == 2);
    CHECK(rep.ues[0].reliable);
    CHECK_FALSE(rep.ues[2].reliable);
    CHECK_FALSE(rep.ues[3].reliable);
    CHECK(rep.ues[3].gain_inconsistency == doctest::Approx(2.0 / 3.0 * std::log(2.0)));
    CHECK_FALSE(validity_indicator(rep, eps, 3));
    // k0 = 0 selects ceil(K / 2).
    CHECK(validity_indicator(rep, eps, 0));
    rep.ues.pop_back();
    CHECK(validity_indicator(rep, eps, 0));
    rep.ues[1] = fake_ue(0.3, 1.0);
    CHECK_FALSE(validity_indicator(rep, eps, 0));
    CHECK(rep.warnings.empty());
}

TEST_CASE("single-row estimates skip the structure check with a warning")
{
    EstimateReport rep;
    UeEstimate u;
    u.tau = RMatrix::Constant(1, 2, 0.3);
    u.beta = CMatrix::Ones(1, 2);
    rep.ues = {u, u};
    CHECK(validity_indicator(rep, 0.1, 2));
    CHECK(rep.warnings.size() == 1);
}

TEST_CASE("estimates are deterministic")
{
    const auto ms = generate_measurements(ScenarioConfig::desk(), 4242);
    const auto a = run_ds_mdt(ms);
    const auto b = run_ds_mdt(ms);
    REQUIRE(a.ok == b.ok);
    REQUIRE(a.ues.size() == b.ues.size());
    for (std::size_t k = 0; k < a.ues.size(); ++k) {
        CHECK(a.ues[k].tau == b.ues[k].tau);
        CHECK(a.ues[k].beta == b.ues[k].beta);
    }
}

TEST_CASE("forced mis-selection picks the weakest UE")
{
    const auto ms = generate_measurements(ScenarioConfig::desk(), 99);
    DsMdtOptions opts;
    opts.p_mis = 1.0;
    const auto rep = run_ds_mdt(ms, opts);
    CHECK(rep.reference_forced);
    for (std::size_t k = 0; k < ms.users(); ++k)
        CHECK(ms.tensors[rep.reference].squared_norm() <= ms.tensors[k].squared_norm());

    opts.p_mis = 0.0;
    const auto plain = run_ds_mdt(ms, opts);
    CHECK_FALSE(plain.reference_forced);
    CHECK(plain.reference == select_reference(ms));
}

TEST_CASE("fallback flag")
{
    const auto ms = generate_measurements(ScenarioConfig::desk(), 17);
    DsMdtOptions opts;
    opts.epsilon = 0.0; // nothing is reliable
    opts.fallback_by_residual = false;
    const auto fb = run_ds_mdt(ms, opts);
    REQUIRE(fb.ok);
    CHECK(fb.fallback_used);
    CHECK_FALSE(fb.primary_valid);

    opts.allow_fallback = false;
    const auto kept = run_ds_mdt(ms, opts);
    CHECK_FALSE(kept.fallback_used);
    CHECK_FALSE(kept.valid);

    DsMdtOptions indep;
    indep.share_offsets = false;
    const auto ind = run_ds_mdt(ms, indep);
    CHECK_FALSE(ind.fallback_used);
}

TEST_CASE("option checks")
{
    const auto ms = generate_measurements(ScenarioConfig::desk(), 1);
    DsMdtOptions opts;
    opts.known_paths = true;
    CHECK_THROWS_AS((void)run_ds_mdt(ms, opts), std::invalid_argument);
    CHECK_THROWS_AS((void)run_ds_mdt(MeasurementSet{}), std::invalid_argument);
}
