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

#include <benchmark/benchmark.h>

#include "dsmdt/ds_mdt.hpp"
#include "dsmdt/metrics.hpp"
#include "dsmdt/scenario.hpp"
#include "dsmdt/subspace.hpp"

using namespace dsmdt;

namespace {

ScenarioConfig profile(int64_t full)
{
    return full != 0 ? ScenarioConfig::paper() : ScenarioConfig::desk();
}

} // namespace

static void BM_GenerateMeasurements(benchmark::State &state)
{
    const auto cfg = profile(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(generate_measurements(cfg, seed++));
}
BENCHMARK(BM_GenerateMeasurements)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_DelayMusic(benchmark::State &state)
{
    const auto P = static_cast<std::size_t>(state.range(0));
    CMatrix X(static_cast<Eigen::Index>(P), 16);
    X.setRandom();
    const CMatrix R = sample_covariance(X);
    const Steering steer = [P](double x) { return steer_ula(P, x); };
    const MusicGrid grid{0.0, 2.0, 512, 3, 0.1, true};
    for (auto _ : state)
        benchmark::DoNotOptimize(music_1d(R, 4, steer, grid));
}
BENCHMARK(BM_DelayMusic)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

static void BM_RisCorrelator(benchmark::State &state)
{
    const auto cfg = profile(state.range(0));
    const auto ms = generate_measurements(cfg, 3);
    const RisCorrelator corr(ms.theta, cfg.N1, cfg.N2);
    const CVector r = ris_response(ms.theta, cfg.N1, cfg.N2, 0.37, 1.21);
    for (auto _ : state)
        benchmark::DoNotOptimize(corr.estimate(r));
}
BENCHMARK(BM_RisCorrelator)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_Pipeline(benchmark::State &state)
{
    const auto cfg = profile(state.range(0));
    const auto ms = generate_measurements(cfg, 11);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_ds_mdt(ms));
}
BENCHMARK(BM_Pipeline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_FactorNmse(benchmark::State &state)
{
    const auto cfg = profile(state.range(0));
    const auto ms = generate_measurements(cfg, 5);
    const auto truth = map_cascaded(ms.scenario, ms.dims.N());
    const auto f = channel_factors(truth[0], ms.dims);
    auto g = f;
    g.weights *= 1.01;
    for (auto _ : state)
        benchmark::DoNotOptimize(nmse(g, f));
}
BENCHMARK(BM_FactorNmse)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
