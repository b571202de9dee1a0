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

// Command-line front end: simulate, sweep, appendix-c, selftest.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsmdt/harness.hpp"
#include "dsmdt/kv_config.hpp"
#include "dsmdt/metrics.hpp"
#include "dsmdt/serialize.hpp"

using namespace dsmdt;

namespace {

// Scenario fields addressable from the command line, keyed by config name.
const std::vector<std::pair<std::string, std::string>> kOverrideFlags = {
    {"--M", "M"},
    {"--N1", "N1"},
    {"--N2", "N2"},
    {"--K", "K"},
    {"--P", "P"},
    {"--Q", "Q"},
    {"--L1", "L1"},
    {"--L2", "L2"},
    {"--snr-db", "snr_db"},
    {"--l2-init", "l2_init"},
    {"--fc", "carrier_freq"},
    {"--dist-bs", "dist_bs"},
    {"--dist-ue-min", "dist_ue_min"},
    {"--dist-ue-max", "dist_ue_max"},
    {"--min-separation", "min_separation"},
};

struct ScenarioFlags {
    std::string config;
    std::string preset;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App *app, bool config_required = false)
    {
        auto *c = app->add_option("--config", config, "flat key=value config file");
        if (config_required)
            c->required();
        else
            c->check(CLI::ExistingFile);
        app->add_option("--preset", preset, "desk or paper");
        for (const auto &[flag, key] : kOverrideFlags)
            app->add_option(flag, overrides[key], "override " + key);
    }

    [[nodiscard]] std::vector<KvEntry> entries() const
    {
        std::vector<KvEntry> out;
        if (!config.empty())
            out = load_kv_file(config);
        if (!preset.empty())
            out.push_back({"preset", preset, 0});
        for (const auto &[key, value] : overrides)
            if (!value.empty())
                out.push_back({key, value, 0});
        return out;
    }
};

std::ostream &open_out(const std::string &path, std::ofstream &file)
{
    if (path.empty() || path == "-")
        return std::cout;
    file.open(path);
    if (!file)
        throw std::runtime_error("cannot open output file '" + path + "'");
    return file;
}

std::vector<std::size_t> count_list(const std::string &key, const std::string &text)
{
    std::vector<std::size_t> out;
    for (const auto &item : split_list(text))
        out.push_back(parse_count(key, item));
    if (out.empty())
        throw ConfigError(key + ": empty list");
    return out;
}

int cmd_simulate(const ScenarioFlags &flags, std::uint64_t seed, const std::string &algo, const std::string &out_path,
                 bool timings)
{
    ScenarioConfig cfg = scenario_from_kv(flags.entries());
    cfg.validate();
    const Algorithm a = parse_algorithm(algo);
    const MeasurementSet ms = generate_measurements(cfg, seed);
    const EstimateReport rep = run_ds_mdt(ms, options_for(a, cfg, {}));

    nlohmann::json j;
    j["config"] = nlohmann::json::parse(to_json(cfg));
    j["seed"] = seed;
    j["algorithm"] = to_string(a);
    j["noise_variance"] = ms.noise_variance;
    j["scenario"] = nlohmann::json::parse(to_json(ms.scenario));
    j["report"] = nlohmann::json::parse(to_json(rep, timings));
    if (rep.ok) {
        const auto truth = map_cascaded(ms.scenario, ms.dims.N());
        nlohmann::json per_ue = nlohmann::json::array();
        double acc = 0.0;
        for (std::size_t k = 0; k < ms.users(); ++k) {
            const double e = nmse(rep.ues[k].channel, channel_factors(truth[k], ms.dims));
            acc += e;
            per_ue.push_back(to_db(e));
        }
        j["nmse_db"] = per_ue;
        j["mean_nmse_db"] = to_db(acc / static_cast<double>(ms.users()));
    }
    std::ofstream file;
    open_out(out_path, file) << j.dump(2) << "\n";
    if (!rep.ok)
        std::cerr << "estimation failed: " << rep.failure << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"dsmdt: channel estimation for RIS-aided multi-user MIMO-OFDM links"};
    app.require_subcommand(1);

    // simulate
    auto *sim = app.add_subcommand("simulate", "estimate one random scenario and print the report as JSON");
    ScenarioFlags sim_flags;
    sim_flags.attach(sim);
    std::uint64_t sim_seed = 0;
    std::string sim_algo = "dsmdt";
    std::string sim_out;
    bool sim_no_times = false;
    sim->add_option("--seed", sim_seed, "scenario seed");
    sim->add_option("--algo", sim_algo, "dsmdt, dsmdt_kpn or independent_fallback");
    sim->add_option("--out", sim_out, "output file (default stdout)");
    sim->add_flag("--no-timings", sim_no_times, "omit stage timings");

    // sweep
    auto *sweep = app.add_subcommand("sweep", "Monte-Carlo sweep; one output row per (value, algorithm)");
    ScenarioFlags sweep_flags;
    sweep_flags.attach(sweep);
    std::optional<std::uint64_t> sweep_seed;
    std::optional<std::size_t> sweep_trials, sweep_workers;
    std::string sweep_out, sweep_format, sweep_algo, sweep_kind, sweep_values, sweep_dump;
    sweep->add_option("--seed", sweep_seed, "root seed")->required();
    sweep->add_option("--trials", sweep_trials, "trials per sweep value");
    sweep->add_option("--out", sweep_out, "output file (default stdout)");
    sweep->add_option("--format", sweep_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sweep->add_option("--algo", sweep_algo, "comma-separated algorithms");
    sweep->add_option("--sweep", sweep_kind, "snr, P, Q, M or pmis");
    sweep->add_option("--values", sweep_values, "comma-separated sweep values");
    sweep->add_option("--dump", sweep_dump, "per-trial JSON-lines file");
    sweep->add_option("--workers", sweep_workers, "worker threads (default DSMDT_WORKERS or all cores)");

    // appendix-c
    auto *appc = app.add_subcommand("appendix-c", "MUSIC with over-estimated source counts, two sources at +/-5 deg");
    AppendixCSpec appc_spec;
    std::string appc_m, appc_counts, appc_out;
    appc->add_option("--seed", appc_spec.seed, "root seed");
    appc->add_option("--trials", appc_spec.trials, "trials per (M, count)");
    appc->add_option("--M", appc_m, "comma-separated array sizes");
    appc->add_option("--counts", appc_counts, "comma-separated assumed source counts");
    appc->add_option("--snapshots", appc_spec.snapshots, "snapshots per trial");
    appc->add_option("--spectrum-dir", appc_spec.spectrum_dir, "directory for pseudospectrum dumps");
    appc->add_option("--out", appc_out, "CSV output (default stdout)");

    // selftest
    auto *self = app.add_subcommand("selftest", "noiseless exact-recovery checks");
    std::uint64_t self_seed = 1;
    std::size_t self_trials = 10;
    self->add_option("--seed", self_seed, "root seed");
    self->add_option("--trials", self_trials, "scenarios per estimator");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    try {
        if (*sim)
            return cmd_simulate(sim_flags, sim_seed, sim_algo, sim_out, !sim_no_times);

        if (*sweep) {
            auto entries = sweep_flags.entries();
            ExperimentSpec spec = experiment_from_kv(entries);
            spec.seed = *sweep_seed;
            if (sweep_trials)
                spec.trials = *sweep_trials;
            if (sweep_workers)
                spec.workers = *sweep_workers;
            if (!sweep_format.empty())
                spec.format = sweep_format;
            if (!sweep_kind.empty())
                apply_experiment_key(spec, "sweep", sweep_kind);
            if (!sweep_values.empty())
                apply_experiment_key(spec, "values", sweep_values);
            if (!sweep_algo.empty())
                apply_experiment_key(spec, "algorithms", sweep_algo);
            if (!sweep_dump.empty())
                spec.trial_dump_path = sweep_dump;
            if (!sweep_out.empty())
                spec.output_path = sweep_out == "-" ? "" : sweep_out;
            const bool to_stdout = spec.output_path.empty();
            const auto rows = run_experiment(spec);
            if (to_stdout) {
                if (spec.format == "json")
                    write_json(std::cout, rows);
                else
                    write_csv(std::cout, rows);
            }
            return 0;
        }

        if (*appc) {
            if (!appc_m.empty())
                appc_spec.m_list = count_list("M", appc_m);
            if (!appc_counts.empty())
                appc_spec.counts = count_list("counts", appc_counts);
            const auto rows = run_appendix_c(appc_spec);
            std::ofstream file;
            write_appendix_c_csv(open_out(appc_out, file), rows);
            return 0;
        }

        if (*self) {
            const auto res = run_selftest(self_seed, self_trials);
            for (const auto &line : res.lines)
                std::cout << line << "\n";
            return res.passed ? 0 : 1;
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument &e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
