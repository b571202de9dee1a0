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

#include "dsmdt/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dsmdt/metrics.hpp"
#include "dsmdt/rng.hpp"
#include "dsmdt/subspace.hpp"

namespace dsmdt {

namespace {

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string lower(std::string s)
{
    for (auto &c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

std::string to_string(SweepKind kind)
{
    switch (kind) {
    case SweepKind::snr: return "snr";
    case SweepKind::P: return "P";
    case SweepKind::Q: return "Q";
    case SweepKind::M: return "M";
    case SweepKind::pmis: return "pmis";
    }
    return "?";
}

std::string to_string(Algorithm algo)
{
    switch (algo) {
    case Algorithm::dsmdt: return "dsmdt";
    case Algorithm::dsmdt_kpn: return "dsmdt_kpn";
    case Algorithm::independent_fallback: return "independent_fallback";
    }
    return "?";
}

SweepKind parse_sweep_kind(const std::string &text)
{
    const auto t = lower(text);
    if (t == "snr" || t == "snr_db")
        return SweepKind::snr;
    if (t == "p")
        return SweepKind::P;
    if (t == "q")
        return SweepKind::Q;
    if (t == "m")
        return SweepKind::M;
    if (t == "pmis" || t == "p_mis")
        return SweepKind::pmis;
    throw std::invalid_argument("unknown sweep kind '" + text + "' (snr, P, Q, M, pmis)");
}

Algorithm parse_algorithm(const std::string &text)
{
    const auto t = lower(text);
    if (t == "dsmdt")
        return Algorithm::dsmdt;
    if (t == "dsmdt_kpn" || t == "kpn")
        return Algorithm::dsmdt_kpn;
    if (t == "independent_fallback" || t == "independent")
        return Algorithm::independent_fallback;
    throw std::invalid_argument("unknown algorithm '" + text + "' (dsmdt, dsmdt_kpn, independent_fallback)");
}

ScenarioConfig ExperimentSpec::config_for(double value) const
{
    ScenarioConfig cfg = base;
    auto as_count = [&](const char *name) {
        if (!(value >= 1.0) || value != std::floor(value))
            throw std::invalid_argument(std::string("sweep value for ") + name + " must be a positive integer");
        return static_cast<std::size_t>(value);
    };
    switch (sweep) {
    case SweepKind::snr: cfg.snr_db = value; break;
    case SweepKind::P: cfg.P = as_count("P"); break;
    case SweepKind::Q: cfg.Q = as_count("Q"); break;
    case SweepKind::M: cfg.M = as_count("M"); break;
    case SweepKind::pmis:
        if (!(value >= 0.0 && value <= 1.0))
            throw std::invalid_argument("pmis sweep values must lie in [0, 1]");
        break;
    }
    return cfg;
}

void ExperimentSpec::validate() const
{
    if (trials == 0)
        throw std::invalid_argument("trials must be at least 1");
    if (values.empty())
        throw std::invalid_argument("sweep needs at least one value");
    if (algorithms.empty())
        throw std::invalid_argument("at least one algorithm is required");
    if (format != "csv" && format != "json")
        throw std::invalid_argument("format must be csv or json");
    for (double v : values)
        config_for(v).validate();
}

DsMdtOptions options_for(Algorithm algo, const ScenarioConfig &cfg, const DsMdtOptions &base)
{
    DsMdtOptions o = base;
    o.l2_init = cfg.l2_init;
    switch (algo) {
    case Algorithm::dsmdt: break;
    case Algorithm::dsmdt_kpn:
        o.known_paths = true;
        o.known_l1 = cfg.L1;
        o.known_l2 = cfg.L2;
        break;
    case Algorithm::independent_fallback:
        o.share_offsets = false;
        break;
    }
    return o;
}

std::vector<TrialRecord> run_trial(const ExperimentSpec &spec, std::size_t sweep_index, std::size_t trial)
{
    const double value = spec.values.at(sweep_index);
    const ScenarioConfig cfg = spec.config_for(value);
    // Common random numbers: trial t sees the same scenario at every sweep value.
    const std::uint64_t trial_seed = derive_seed(spec.seed, {kTrialStream, trial});
    const MeasurementSet ms = generate_measurements(cfg, trial_seed);
    const auto truth = map_cascaded(ms.scenario, ms.dims.N());

    std::vector<TrialRecord> out;
    for (Algorithm algo : spec.algorithms) {
        DsMdtOptions opts = options_for(algo, cfg, spec.options);
        if (spec.sweep == SweepKind::pmis) {
            opts.p_mis = value;
            opts.misselect_seed = trial_seed;
        }
        TrialRecord r;
        r.sweep_index = sweep_index;
        r.sweep_value = value;
        r.trial = trial;
        r.algorithm = algo;
        r.trial_seed = trial_seed;
        r.l1_true = cfg.L1;
        for (std::size_t k = 0; k < ms.users(); ++k)
            r.l2_true.push_back(ms.scenario.ue_ris[k].paths());

        const auto t0 = std::chrono::steady_clock::now();
        try {
            const EstimateReport rep = run_ds_mdt(ms, opts);
            r.ok = rep.ok;
            r.failure = rep.failure;
            r.reference = rep.reference;
            r.l1_hat = rep.l1_hat;
            r.valid = rep.valid;
            r.fallback_used = rep.fallback_used;
            r.reference_forced = rep.reference_forced;
            if (rep.ok) {
                double acc = 0.0;
                for (std::size_t k = 0; k < ms.users(); ++k) {
                    acc += nmse(rep.ues[k].channel, channel_factors(truth[k], ms.dims));
                    r.l2_hat.push_back(rep.ues[k].l2_hat);
                }
                r.nmse = acc / static_cast<double>(ms.users());
            }
        } catch (const std::exception &e) {
            r.ok = false;
            r.failure = e.what();
        }
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    return out;
}

ResultRow aggregate(SweepKind sweep, const std::vector<TrialRecord> &records)
{
    if (records.empty())
        throw std::invalid_argument("aggregate: no records");
    ResultRow row;
    row.sweep = sweep;
    row.sweep_value = records.front().sweep_value;
    row.algorithm = records.front().algorithm;
    row.trials = records.size();

    std::vector<double> lin, db, l1, l2r, l2o;
    std::size_t l1_hits = 0, l2r_hits = 0, l2o_hits = 0, l2o_total = 0, valid = 0, fallback = 0;
    double wall = 0.0;
    for (const auto &r : records) {
        wall += r.wall_time;
        const std::size_t others = r.l2_true.empty() ? 0 : r.l2_true.size() - 1;
        l2o_total += others;
        if (!r.ok) {
            ++row.failures;
            continue;
        }
        ++row.successes;
        lin.push_back(r.nmse);
        db.push_back(to_db(r.nmse));
        l1.push_back(static_cast<double>(r.l1_hat));
        l1_hits += r.l1_hat == r.l1_true ? 1 : 0;
        for (std::size_t k = 0; k < r.l2_hat.size(); ++k) {
            const bool hit = r.l2_hat[k] == r.l2_true[k];
            if (k == r.reference) {
                l2r.push_back(static_cast<double>(r.l2_hat[k]));
                l2r_hits += hit ? 1 : 0;
            } else {
                l2o.push_back(static_cast<double>(r.l2_hat[k]));
                l2o_hits += hit ? 1 : 0;
            }
        }
        valid += r.valid ? 1 : 0;
        fallback += r.fallback_used ? 1 : 0;
    }
    const double n = static_cast<double>(row.trials);
    row.mean_nmse_db = mean_nmse_db(lin);
    row.nmse_std_db = mean_std(db).std;
    row.pesr_l1 = 100.0 * static_cast<double>(l1_hits) / n;
    row.pesr_l2_ref = 100.0 * static_cast<double>(l2r_hits) / n;
    row.pesr_l2_other = l2o_total > 0 ? 100.0 * static_cast<double>(l2o_hits) / static_cast<double>(l2o_total) : 0.0;
    const auto s1 = mean_std(l1), s2 = mean_std(l2r), s3 = mean_std(l2o);
    row.encp_l1_mean = s1.mean;
    row.encp_l1_std = s1.std;
    row.encp_l2_ref_mean = s2.mean;
    row.encp_l2_ref_std = s2.std;
    row.encp_l2_other_mean = s3.mean;
    row.encp_l2_other_std = s3.std;
    row.validity_rate = static_cast<double>(valid) / n;
    row.fallback_rate = static_cast<double>(fallback) / n;
    row.wall_time = wall / n;
    return row;
}

std::size_t default_workers()
{
    if (const char *env = std::getenv("DSMDT_WORKERS")) {
        char *end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::vector<ResultRow> run_experiment(const ExperimentSpec &spec, std::vector<TrialRecord> *records)
{
    spec.validate();
    const std::size_t tasks = spec.values.size() * spec.trials;
    const std::size_t workers = std::min(tasks, spec.workers > 0 ? spec.workers : default_workers());

    std::vector<std::vector<TrialRecord>> results(tasks);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex log_mutex;
    const std::size_t report_every = std::max<std::size_t>(1, tasks / 20);

    auto worker = [&] {
        for (std::size_t i = next++; i < tasks; i = next++) {
            results[i] = run_trial(spec, i / spec.trials, i % spec.trials);
            const std::size_t d = ++done;
            if (spec.progress && (d % report_every == 0 || d == tasks)) {
                std::lock_guard lock(log_mutex);
                std::cerr << "[dsmdt] " << to_string(spec.sweep) << " sweep: " << d << "/" << tasks << " trials\n";
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();

    std::vector<TrialRecord> flat;
    flat.reserve(tasks * spec.algorithms.size());
    for (auto &r : results)
        for (auto &rec : r)
            flat.push_back(std::move(rec));

    std::vector<ResultRow> rows;
    for (std::size_t s = 0; s < spec.values.size(); ++s)
        for (Algorithm algo : spec.algorithms) {
            std::vector<TrialRecord> group;
            for (const auto &r : flat)
                if (r.sweep_index == s && r.algorithm == algo)
                    group.push_back(r);
            rows.push_back(aggregate(spec.sweep, group));
        }

    if (!spec.output_path.empty()) {
        std::ofstream out(spec.output_path);
        if (!out)
            throw std::runtime_error("cannot open output file " + spec.output_path);
        if (spec.format == "json")
            write_json(out, rows);
        else
            write_csv(out, rows);
    }
    if (!spec.trial_dump_path.empty()) {
        std::ofstream out(spec.trial_dump_path);
        if (!out)
            throw std::runtime_error("cannot open trial dump " + spec.trial_dump_path);
        write_trials_jsonl(out, flat);
    }
    if (records)
        *records = std::move(flat);
    return rows;
}

std::string csv_escape(const std::string &field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_header()
{
    return "schema_version,sweep,sweep_value,algorithm,trials,successes,failures,mean_nmse_db,nmse_std_db,"
           "pesr_l1,pesr_l2_ref,pesr_l2_other,encp_l1_mean,encp_l1_std,encp_l2_ref_mean,encp_l2_ref_std,"
           "encp_l2_other_mean,encp_l2_other_std,validity_rate,fallback_rate,wall_time";
}

void write_csv(std::ostream &out, const std::vector<ResultRow> &rows, bool include_wall_time)
{
    out << csv_header() << "\n";
    for (const auto &r : rows) {
        out << r.schema_version << ',' << csv_escape(to_string(r.sweep)) << ',' << fmt(r.sweep_value) << ','
            << csv_escape(to_string(r.algorithm)) << ',' << r.trials << ',' << r.successes << ',' << r.failures << ','
            << fmt(r.mean_nmse_db) << ',' << fmt(r.nmse_std_db) << ',' << fmt(r.pesr_l1) << ','
            << fmt(r.pesr_l2_ref) << ',' << fmt(r.pesr_l2_other) << ',' << fmt(r.encp_l1_mean) << ','
            << fmt(r.encp_l1_std) << ',' << fmt(r.encp_l2_ref_mean) << ',' << fmt(r.encp_l2_ref_std) << ','
            << fmt(r.encp_l2_other_mean) << ',' << fmt(r.encp_l2_other_std) << ',' << fmt(r.validity_rate) << ','
            << fmt(r.fallback_rate) << ',';
        if (include_wall_time)
            out << fmt(r.wall_time);
        out << "\n";
    }
}

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace

void write_json(std::ostream &out, const std::vector<ResultRow> &rows)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &r : rows) {
        arr.push_back({{"schema_version", r.schema_version},
                       {"sweep", to_string(r.sweep)},
                       {"sweep_value", number(r.sweep_value)},
                       {"algorithm", to_string(r.algorithm)},
                       {"trials", r.trials},
                       {"successes", r.successes},
                       {"failures", r.failures},
                       {"mean_nmse_db", number(r.mean_nmse_db)},
                       {"nmse_std_db", number(r.nmse_std_db)},
                       {"pesr_l1", number(r.pesr_l1)},
                       {"pesr_l2_ref", number(r.pesr_l2_ref)},
                       {"pesr_l2_other", number(r.pesr_l2_other)},
                       {"encp_l1_mean", number(r.encp_l1_mean)},
                       {"encp_l1_std", number(r.encp_l1_std)},
                       {"encp_l2_ref_mean", number(r.encp_l2_ref_mean)},
                       {"encp_l2_ref_std", number(r.encp_l2_ref_std)},
                       {"encp_l2_other_mean", number(r.encp_l2_other_mean)},
                       {"encp_l2_other_std", number(r.encp_l2_other_std)},
                       {"validity_rate", number(r.validity_rate)},
                       {"fallback_rate", number(r.fallback_rate)},
                       {"wall_time", number(r.wall_time)}});
    }
    out << arr.dump(2) << "\n";
}

void write_trials_jsonl(std::ostream &out, const std::vector<TrialRecord> &records)
{
    for (const auto &r : records) {
        nlohmann::json j{{"sweep_index", r.sweep_index},
                         {"sweep_value", number(r.sweep_value)},
                         {"trial", r.trial},
                         {"algorithm", to_string(r.algorithm)},
                         {"trial_seed", r.trial_seed},
                         {"ok", r.ok},
                         {"failure", r.failure},
                         {"nmse", number(r.nmse)},
                         {"l1_true", r.l1_true},
                         {"l1_hat", r.l1_hat},
                         {"reference", r.reference},
                         {"l2_true", r.l2_true},
                         {"l2_hat", r.l2_hat},
                         {"valid", r.valid},
                         {"fallback_used", r.fallback_used},
                         {"reference_forced", r.reference_forced},
                         {"wall_time", number(r.wall_time)}};
        out << j.dump() << "\n";
    }
}

std::vector<AppendixCRow> run_appendix_c(const AppendixCSpec &spec)
{
    if (spec.m_list.empty() || spec.counts.empty() || spec.trials == 0 || spec.snapshots == 0)
        throw std::invalid_argument("appendix-c: empty M list, count list, trials or snapshots");
    const double x0 = std::sin(spec.angle_deg * std::numbers::pi / 180.0);
    const std::array<double, 2> truth{-x0, x0};
    const MusicGrid grid{-1.0, 1.0, spec.grid_points, 3, 0.1, true};
    if (!spec.spectrum_dir.empty())
        std::filesystem::create_directories(spec.spectrum_dir);

    std::vector<AppendixCRow> rows;
    for (std::size_t mi = 0; mi < spec.m_list.size(); ++mi) {
        const std::size_t M = spec.m_list[mi];
        if (M < 2)
            throw std::invalid_argument("appendix-c: M must be at least 2");
        const Steering steer = [M](double x) { return steer_ula(M, x); };
        CMatrix A(static_cast<Eigen::Index>(M), 2);
        for (int s = 0; s < 2; ++s)
            A.col(s) = steer(truth[static_cast<std::size_t>(s)]);

        std::vector<double> acc(spec.counts.size(), 0.0);
        for (std::size_t t = 0; t < spec.trials; ++t) {
            Rng rng(derive_seed(spec.seed, {kTrialStream, mi, t}));
            CMatrix S(2, static_cast<Eigen::Index>(spec.snapshots));
            for (Eigen::Index j = 0; j < S.size(); ++j)
                S.data()[j] = rng.complex_normal(1.0);
            CMatrix X = A * S;
            const double sigma2 =
                X.squaredNorm() / static_cast<double>(X.size()) / std::pow(10.0, spec.snr_db / 10.0);
            for (Eigen::Index j = 0; j < X.size(); ++j)
                X.data()[j] += rng.complex_normal(sigma2);
            const CMatrix R = sample_covariance(X);

            for (std::size_t ci = 0; ci < spec.counts.size(); ++ci) {
                const std::size_t L = spec.counts[ci];
                if (L == 0 || L >= M)
                    throw std::invalid_argument("appendix-c: assumed count must lie in [1, M)");
                const auto res = music_1d(R, L, steer, grid);
                std::vector<std::size_t> order(res.estimates.size());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return res.peak_values[a] > res.peak_values[b]; });
                std::vector<double> est;
                for (std::size_t i = 0; i < std::min<std::size_t>(2, order.size()); ++i)
                    est.push_back(res.estimates[order[i]]);
                while (est.size() < 2)
                    est.push_back(0.0);
                std::sort(est.begin(), est.end());
                const double err = (est[0] - truth[0]) * (est[0] - truth[0]) + (est[1] - truth[1]) * (est[1] - truth[1]);
                acc[ci] += err / (truth[0] * truth[0] + truth[1] * truth[1]);

                if (t == 0 && !spec.spectrum_dir.empty()) {
                    std::vector<double> xs(spec.grid_points);
                    for (std::size_t i = 0; i < xs.size(); ++i)
                        xs[i] = grid.point(i);
                    const auto spectrum = music_spectrum(R, L, steer, xs);
                    const auto path = std::filesystem::path(spec.spectrum_dir) /
                                      ("spectrum_M" + std::to_string(M) + "_L" + std::to_string(L) + ".txt");
                    std::ofstream f(path);
                    if (!f)
                        throw std::runtime_error("cannot write " + path.string());
                    f << "# x pseudospectrum\n";
                    for (std::size_t i = 0; i < xs.size(); ++i)
                        f << fmt(xs[i]) << ' ' << fmt(spectrum[i]) << "\n";
                }
            }
        }
        for (std::size_t ci = 0; ci < spec.counts.size(); ++ci)
            rows.push_back({M, spec.counts[ci], to_db(acc[ci] / static_cast<double>(spec.trials)), spec.trials});
    }
    return rows;
}

void write_appendix_c_csv(std::ostream &out, const std::vector<AppendixCRow> &rows)
{
    out << "M,assumed_count,angle_nmse_db,trials\n";
    for (const auto &r : rows)
        out << r.M << ',' << r.assumed << ',' << fmt(r.nmse_db) << ',' << r.trials << "\n";
}

double appendix_c_spread(const std::vector<AppendixCRow> &rows, std::size_t M)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto &r : rows)
        if (r.M == M) {
            lo = std::min(lo, r.nmse_db);
            hi = std::max(hi, r.nmse_db);
        }
    if (hi < lo)
        throw std::invalid_argument("appendix_c_spread: no rows for this M");
    return hi - lo;
}

SelftestResult run_selftest(std::uint64_t seed, std::size_t trials)
{
    SelftestResult out;
    ScenarioConfig cfg = ScenarioConfig::desk();
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.min_separation = 2.0;
    const double limit_db = -60.0;

    for (Algorithm algo : {Algorithm::dsmdt_kpn, Algorithm::dsmdt}) {
        std::size_t pass = 0;
        double worst = kNmseFloorDb;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto ms = generate_measurements(cfg, derive_seed(seed, {kTrialStream, t}));
            const auto truth = map_cascaded(ms.scenario, ms.dims.N());
            double e = 1.0;
            bool counts = false;
            try {
                const auto rep = run_ds_mdt(ms, options_for(algo, cfg, {}));
                if (rep.ok) {
                    e = 0.0;
                    counts = rep.l1_hat == cfg.L1;
                    for (std::size_t k = 0; k < ms.users(); ++k) {
                        e += nmse(rep.ues[k].channel, channel_factors(truth[k], ms.dims));
                        counts = counts && rep.ues[k].l2_hat == ms.scenario.ue_ris[k].paths();
                    }
                    e /= static_cast<double>(ms.users());
                }
            } catch (const std::exception &) {
                e = 1.0;
            }
            worst = std::max(worst, to_db(e));
            pass += to_db(e) < limit_db && counts ? 1 : 0;
        }
        const bool ok = pass == trials;
        out.passed = out.passed && ok;
        std::ostringstream line;
        line << (ok ? "PASS " : "FAIL ") << to_string(algo) << " noiseless recovery: " << pass << "/" << trials
             << " trials below " << limit_db << " dB with exact path counts (worst " << worst << " dB)";
        out.lines.push_back(line.str());
    }
    return out;
}

} // namespace dsmdt
