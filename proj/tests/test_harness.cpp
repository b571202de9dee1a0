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
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsmdt/harness.hpp"
#include "dsmdt/metrics.hpp"

using namespace dsmdt;

namespace {

ExperimentSpec small_spec()
{
    ExperimentSpec spec;
    spec.values = {0.0, 20.0};
    spec.trials = 3;
    spec.seed = 11;
    spec.algorithms = {Algorithm::dsmdt, Algorithm::dsmdt_kpn};
    spec.workers = 1;
    spec.progress = false;
    return spec;
}

std::string csv_of(const std::vector<ResultRow> &rows)
{
    std::ostringstream out;
    write_csv(out, rows, false);
    return out.str();
}

} // namespace

TEST_CASE("names round-trip")
{
    for (auto k : {SweepKind::snr, SweepKind::P, SweepKind::Q, SweepKind::M, SweepKind::pmis})
        CHECK(parse_sweep_kind(to_string(k)) == k);
    for (auto a : {Algorithm::dsmdt, Algorithm::dsmdt_kpn, Algorithm::independent_fallback})
        CHECK(parse_algorithm(to_string(a)) == a);
    CHECK(parse_sweep_kind("SNR_dB") == SweepKind::snr);
    CHECK(parse_algorithm("KPN") == Algorithm::dsmdt_kpn);
    CHECK_THROWS_AS((void)parse_sweep_kind("L1"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_algorithm("omp"), std::invalid_argument);
}

TEST_CASE("csv field quoting")
{
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
    CHECK(csv_escape("") == "");
}

TEST_CASE("experiment spec validation")
{
    auto spec = small_spec();
    CHECK_NOTHROW(spec.validate());
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_spec();
    spec.values.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_spec();
    spec.format = "xml";
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_spec();
    spec.sweep = SweepKind::P;
    spec.values = {2.0}; // P must exceed l2_init
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.values = {64.5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_spec();
    spec.sweep = SweepKind::pmis;
    spec.values = {1.5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.values = {0.25};
    CHECK(spec.config_for(0.25).snr_db == spec.base.snr_db);
}

TEST_CASE("options per algorithm")
{
    const auto cfg = ScenarioConfig::desk();
    const auto kpn = options_for(Algorithm::dsmdt_kpn, cfg, {});
    CHECK(kpn.known_paths);
    CHECK(kpn.known_l1 == cfg.L1);
    CHECK(kpn.known_l2 == cfg.L2);
    CHECK_FALSE(options_for(Algorithm::independent_fallback, cfg, {}).share_offsets);
    CHECK(options_for(Algorithm::dsmdt, cfg, {}).share_offsets);
}

TEST_CASE("seeded experiments are reproducible and aggregate their trials")
{
    const auto spec = small_spec();
    std::vector<TrialRecord> records;
    const auto rows = run_experiment(spec, &records);
    const auto again = run_experiment(spec);
    CHECK(csv_of(rows) == csv_of(again));

    REQUIRE(rows.size() == 4);
    REQUIRE(records.size() == 12);
    for (const auto &row : rows) {
        CHECK(row.successes + row.failures == row.trials);
        CHECK(row.trials == spec.trials);
        double acc = 0.0;
        std::size_t ok = 0;
        for (const auto &r : records)
            if (r.sweep_value == row.sweep_value && r.algorithm == row.algorithm && r.ok) {
                acc += r.nmse;
                ++ok;
            }
        REQUIRE(ok == row.successes);
        CHECK(row.mean_nmse_db == doctest::Approx(to_db(acc / static_cast<double>(ok))).epsilon(1e-12));
    }

    // Trial t uses the same scenario at every sweep value.
    for (const auto &a : records)
        for (const auto &b : records)
            if (a.trial == b.trial)
                CHECK(a.trial_seed == b.trial_seed);

    ExperimentSpec other = spec;
    other.seed = 12;
    CHECK(csv_of(run_experiment(other)) != csv_of(rows));
}

TEST_CASE("output files")
{
    const auto dir = std::filesystem::temp_directory_path() / "dsmdt_test_harness";
    std::filesystem::create_directories(dir);
    auto spec = small_spec();
    spec.values = {10.0};
    spec.trials = 2;
    spec.output_path = (dir / "rows.json").string();
    spec.format = "json";
    spec.trial_dump_path = (dir / "trials.jsonl").string();
    const auto rows = run_experiment(spec);

    std::ifstream json_in(spec.output_path);
    const auto doc = nlohmann::json::parse(json_in);
    REQUIRE(doc.size() == rows.size());
    CHECK(doc[0]["algorithm"] == "dsmdt");
    CHECK(doc[0]["trials"] == 2);

    std::ifstream dump(spec.trial_dump_path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(dump, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("trial_seed"));
        ++n;
    }
    CHECK(n == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv layout")
{
    ResultRow r;
    r.sweep_value = 5.0;
    r.trials = 1;
    r.successes = 1;
    r.mean_nmse_db = -12.5;
    r.wall_time = 0.25;
    std::ostringstream with, without;
    write_csv(with, {r});
    write_csv(without, {r}, false);
    CHECK(with.str().rfind(csv_header() + "\n1,snr,5,dsmdt,1,1,0,-12.5,", 0) == 0);
    CHECK(with.str().find(",0.25\n") != std::string::npos);
    CHECK(without.str().substr(without.str().size() - 2) == ",\n");
}

TEST_CASE("aggregate input checks")
{
    CHECK_THROWS_AS((void)aggregate(SweepKind::snr, {}), std::invalid_argument);
    TrialRecord failed;
    failed.ok = false;
    failed.l2_true = {2, 2};
    const auto row = aggregate(SweepKind::snr, {failed});
    CHECK(row.failures == 1);
    CHECK(row.successes == 0);
}

TEST_CASE("array-size spread helper")
{
    const std::vector<AppendixCRow> rows{{8, 2, -20.0, 5}, {8, 3, -14.5, 5}, {16, 2, -30.0, 5}};
    CHECK(appendix_c_spread(rows, 8) == doctest::Approx(5.5));
    CHECK(appendix_c_spread(rows, 16) == 0.0);
    CHECK_THROWS_AS((void)appendix_c_spread(rows, 32), std::invalid_argument);
}
