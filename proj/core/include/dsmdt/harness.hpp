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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dsmdt/ds_mdt.hpp"
#include "dsmdt/scenario.hpp"

namespace dsmdt {

inline constexpr int kCsvSchemaVersion = 1;

enum class SweepKind { snr, P, Q, M, pmis };
enum class Algorithm { dsmdt, dsmdt_kpn, independent_fallback };

[[nodiscard]] std::string to_string(SweepKind kind);
[[nodiscard]] std::string to_string(Algorithm algo);
[[nodiscard]] SweepKind parse_sweep_kind(const std::string &text);
[[nodiscard]] Algorithm parse_algorithm(const std::string &text);

struct ExperimentSpec {
    ScenarioConfig base = ScenarioConfig::desk();
    SweepKind sweep = SweepKind::snr;
    std::vector<double> values{10.0};
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    std::vector<Algorithm> algorithms{Algorithm::dsmdt};
    std::string output_path;     // empty: no file
    std::string format = "csv";  // csv | json
    std::string trial_dump_path; // JSON lines, one object per (trial, algorithm)
    std::size_t workers = 0;     // 0: DSMDT_WORKERS, then hardware concurrency
    bool progress = true;        // report progress on stderr
    DsMdtOptions options;        // l2_init is taken from `base`

    // Throws std::invalid_argument on an empty sweep, zero trials, or a sweep
    // value that breaks the scenario constraints.
    void validate() const;
    [[nodiscard]] ScenarioConfig config_for(double value) const;
};

// One (trial, algorithm) outcome.
struct TrialRecord {
    std::size_t sweep_index = 0;
    double sweep_value = 0.0;
    std::size_t trial = 0;
    Algorithm algorithm = Algorithm::dsmdt;
    std::uint64_t trial_seed = 0;
    bool ok = false;
    std::string failure;
    double nmse = 0.0; // linear, averaged over UEs
    std::size_t l1_true = 0;
    std::size_t l1_hat = 0;
    std::size_t reference = 0;
    std::vector<std::size_t> l2_true;
    std::vector<std::size_t> l2_hat;
    bool valid = false;
    bool fallback_used = false;
    bool reference_forced = false;
    double wall_time = 0.0;
};

struct ResultRow {
    int schema_version = kCsvSchemaVersion;
    SweepKind sweep = SweepKind::snr;
    double sweep_value = 0.0;
    Algorithm algorithm = Algorithm::dsmdt;
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    double mean_nmse_db = 0.0; // linear mean over successful trials, in dB
    double nmse_std_db = 0.0;  // spread of the per-trial dB values
    double pesr_l1 = 0.0;      // percent of trials with L1_hat == L1
    double pesr_l2_ref = 0.0;
    double pesr_l2_other = 0.0;
    double encp_l1_mean = 0.0;
    double encp_l1_std = 0.0;
    double encp_l2_ref_mean = 0.0;
    double encp_l2_ref_std = 0.0;
    double encp_l2_other_mean = 0.0;
    double encp_l2_other_std = 0.0;
    double validity_rate = 0.0;
    double fallback_rate = 0.0;
    double wall_time = 0.0; // mean seconds per trial
};

// Estimator options for one algorithm on one scenario.
[[nodiscard]] DsMdtOptions options_for(Algorithm algo, const ScenarioConfig &cfg, const DsMdtOptions &base);

// Runs a single seeded trial for every requested algorithm on one shared
// measurement set.
[[nodiscard]] std::vector<TrialRecord> run_trial(const ExperimentSpec &spec, std::size_t sweep_index,
                                                 std::size_t trial);

// Aggregates records that share sweep value and algorithm.
[[nodiscard]] ResultRow aggregate(SweepKind sweep, const std::vector<TrialRecord> &records);

// All sweep values x algorithms. Records are sorted by (sweep value, trial,
// algorithm); pass `records` to keep them. Writes output_path and
// trial_dump_path when set.
std::vector<ResultRow> run_experiment(const ExperimentSpec &spec, std::vector<TrialRecord> *records = nullptr);

[[nodiscard]] std::string csv_header();
void write_csv(std::ostream &out, const std::vector<ResultRow> &rows, bool include_wall_time = true);
void write_json(std::ostream &out, const std::vector<ResultRow> &rows);
void write_trials_jsonl(std::ostream &out, const std::vector<TrialRecord> &records);
// RFC 4180 field quoting.
[[nodiscard]] std::string csv_escape(const std::string &field);

// Worker count from DSMDT_WORKERS, else hardware concurrency (at least 1).
[[nodiscard]] std::size_t default_workers();

// Two-source MUSIC study of assumed source counts at several array sizes.
struct AppendixCSpec {
    std::vector<std::size_t> m_list{8, 16, 32, 64, 128};
    std::vector<std::size_t> counts{2, 3, 4, 5};
    double angle_deg = 5.0;    // sources at +/- this angle from broadside
    double snr_db = 10.0;
    std::size_t snapshots = 100;
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    std::size_t grid_points = 2048; // over [-1, 1)
    std::string spectrum_dir;       // empty: no dumps
};

struct AppendixCRow {
    std::size_t M = 0;
    std::size_t assumed = 0;
    double nmse_db = 0.0;
    std::size_t trials = 0;
};

[[nodiscard]] std::vector<AppendixCRow> run_appendix_c(const AppendixCSpec &spec);
void write_appendix_c_csv(std::ostream &out, const std::vector<AppendixCRow> &rows);

// Largest minus smallest NMSE across assumed counts at one M.
[[nodiscard]] double appendix_c_spread(const std::vector<AppendixCRow> &rows, std::size_t M);

// Noiseless recovery checks on well-separated desk scenarios.
struct SelftestResult {
    bool passed = true;
    std::vector<std::string> lines;
};

[[nodiscard]] SelftestResult run_selftest(std::uint64_t seed, std::size_t trials = 10);

} // namespace dsmdt
