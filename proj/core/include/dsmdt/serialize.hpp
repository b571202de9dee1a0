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

#include <string>

#include "dsmdt/channel.hpp"
#include "dsmdt/ds_mdt.hpp"
#include "dsmdt/scenario.hpp"

namespace dsmdt {

// JSON text. Complex values are [re, im] pairs, matrices are row-major nested
// arrays, and doubles round-trip exactly.
[[nodiscard]] std::string to_json(const ScenarioConfig &cfg, int indent = 2);
[[nodiscard]] std::string to_json(const ChannelScenario &scenario, int indent = 2);
// Timings vary run to run; leave them out for byte-level comparisons.
[[nodiscard]] std::string to_json(const EstimateReport &report, bool include_timings = true, int indent = 2);

// Throws std::invalid_argument on malformed input.
[[nodiscard]] ChannelScenario channel_scenario_from_json(const std::string &text);
[[nodiscard]] ScenarioConfig scenario_config_from_json(const std::string &text);

} // namespace dsmdt
