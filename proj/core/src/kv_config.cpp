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

#include "dsmdt/kv_config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>

namespace dsmdt {

namespace {

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string &key, const std::string &value)
{
    const std::string v = trim(value);
    if (v.empty() || v[0] == '-')
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    errno = 0;
    char *end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0')
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return static_cast<std::uint64_t>(x);
}

} // namespace

std::vector<std::string> split_list(const std::string &value)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

std::size_t parse_count(const std::string &key, const std::string &value)
{
    return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(const std::string &key, const std::string &value)
{
    const std::string v = trim(value);
    if (v == "inf" || v == "+inf")
        return std::numeric_limits<double>::infinity();
    errno = 0;
    char *end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || errno != 0 || end == v.c_str() || *end != '\0' || std::isnan(x))
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return x;
}

std::vector<KvEntry> parse_kv(std::istream &in)
{
    std::vector<KvEntry> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(n) + ": expected 'key = value'");
        KvEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), n};
        if (e.key.empty())
            throw ConfigError("line " + std::to_string(n) + ": empty key");
        if (e.value.empty())
            throw ConfigError("line " + std::to_string(n) + ": empty value for '" + e.key + "'");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<KvEntry> load_kv_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_kv(in);
}

bool apply_scenario_key(ScenarioConfig &cfg, const std::string &key, const std::string &value)
{
    if (key == "M")
        cfg.M = parse_count(key, value);
    else if (key == "N1")
        cfg.N1 = parse_count(key, value);
    else if (key == "N2")
        cfg.N2 = parse_count(key, value);
    else if (key == "K")
        cfg.K = parse_count(key, value);
    else if (key == "P")
        cfg.P = parse_count(key, value);
    else if (key == "Q")
        cfg.Q = parse_count(key, value);
    else if (key == "L1")
        cfg.L1 = parse_count(key, value);
    else if (key == "L2") {
        cfg.L2.clear();
        for (const auto &item : split_list(value))
            cfg.L2.push_back(parse_count(key, item));
        if (cfg.L2.empty())
            throw ConfigError("L2: empty list");
    } else if (key == "carrier_freq" || key == "fc")
        cfg.carrier_freq = parse_real(key, value);
    else if (key == "dist_bs")
        cfg.dist_bs = parse_real(key, value);
    else if (key == "dist_ue_min")
        cfg.dist_ue_min = parse_real(key, value);
    else if (key == "dist_ue_max")
        cfg.dist_ue_max = parse_real(key, value);
    else if (key == "snr_db")
        cfg.snr_db = parse_real(key, value);
    else if (key == "l2_init")
        cfg.l2_init = parse_count(key, value);
    else if (key == "min_separation")
        cfg.min_separation = parse_real(key, value);
    else
        return false;
    return true;
}

bool apply_experiment_key(ExperimentSpec &spec, const std::string &key, const std::string &value)
{
    try {
        if (key == "sweep")
            spec.sweep = parse_sweep_kind(value);
        else if (key == "values") {
            spec.values.clear();
            for (const auto &item : split_list(value))
                spec.values.push_back(parse_real(key, item));
        } else if (key == "trials")
            spec.trials = parse_count(key, value);
        else if (key == "seed")
            spec.seed = parse_u64(key, value);
        else if (key == "algorithms") {
            spec.algorithms.clear();
            for (const auto &item : split_list(value))
                spec.algorithms.push_back(parse_algorithm(item));
        } else if (key == "output" || key == "output_path")
            spec.output_path = value;
        else if (key == "format")
            spec.format = value;
        else if (key == "trial_dump")
            spec.trial_dump_path = value;
        else if (key == "workers")
            spec.workers = parse_count(key, value);
        else if (key == "epsilon")
            spec.options.epsilon = parse_real(key, value);
        else if (key == "k0")
            spec.options.k0 = parse_count(key, value);
        else
            return false;
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw ConfigError(key + ": " + e.what());
    }
    return true;
}

ExperimentSpec experiment_from_kv(const std::vector<KvEntry> &entries)
{
    ExperimentSpec spec;
    for (const auto &e : entries)
        if (e.key == "preset") {
            try {
                spec.base = ScenarioConfig::preset(e.value);
            } catch (const std::invalid_argument &ex) {
                throw ConfigError("line " + std::to_string(e.line) + ": " + ex.what());
            }
        }
    for (const auto &e : entries) {
        if (e.key == "preset")
            continue;
        try {
            if (!apply_scenario_key(spec.base, e.key, e.value) && !apply_experiment_key(spec, e.key, e.value))
                throw ConfigError("unknown key '" + e.key + "'");
        } catch (const ConfigError &ex) {
            throw ConfigError("line " + std::to_string(e.line) + ": " + ex.what());
        }
    }
    return spec;
}

ScenarioConfig scenario_from_kv(const std::vector<KvEntry> &entries)
{
    ScenarioConfig cfg = ScenarioConfig::desk();
    for (const auto &e : entries)
        if (e.key == "preset")
            cfg = ScenarioConfig::preset(e.value);
    for (const auto &e : entries) {
        if (e.key == "preset")
            continue;
        if (!apply_scenario_key(cfg, e.key, e.value))
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    return cfg;
}

} // namespace dsmdt
