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
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dsmdt/harness.hpp"
#include "dsmdt/scenario.hpp"

namespace dsmdt {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct KvEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

// Flat `key = value` text; '#' starts a comment, blank lines are skipped.
// Keys are case-sensitive. A repeated key overrides the earlier one.
[[nodiscard]] std::vector<KvEntry> parse_kv(std::istream &in);
[[nodiscard]] std::vector<KvEntry> load_kv_file(const std::string &path);

// Applies one scenario field. Returns false for keys that are not scenario
// fields; throws ConfigError on a malformed value.
bool apply_scenario_key(ScenarioConfig &cfg, const std::string &key, const std::string &value);

// Same for experiment-level keys (sweep, values, trials, seed, algorithms,
// output, format, trial_dump, workers, epsilon, k0).
bool apply_experiment_key(ExperimentSpec &spec, const std::string &key, const std::string &value);

// `preset` is applied first, then every other entry in file order. Unknown
// keys throw.
[[nodiscard]] ExperimentSpec experiment_from_kv(const std::vector<KvEntry> &entries);
[[nodiscard]] ScenarioConfig scenario_from_kv(const std::vector<KvEntry> &entries);

// Parsing helpers shared with the command line.
[[nodiscard]] std::size_t parse_count(const std::string &key, const std::string &value);
[[nodiscard]] double parse_real(const std::string &key, const std::string &value);
[[nodiscard]] std::vector<std::string> split_list(const std::string &value);

} // namespace dsmdt
