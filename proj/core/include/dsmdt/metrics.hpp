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
#include <span>

#include "dsmdt/channel.hpp"
#include "dsmdt/tensor.hpp"

namespace dsmdt {

// Reported in place of -inf dB for an exact estimate.
inline constexpr double kNmseFloorDb = -120.0;

// ||h_hat - h||_F^2 / ||h||_F^2. Throws on mismatched dims or zero-energy truth.
[[nodiscard]] double nmse(const Tensor3 &h_hat, const Tensor3 &h_true);

// Same ratio for two weighted CP models, computed from factor Gram matrices
// without materializing either tensor.
[[nodiscard]] double nmse(const CpdFactors &est, const CpdFactors &truth);

// 10 log10(x), clamped below at kNmseFloorDb.
[[nodiscard]] double to_db(double linear);

// Linear mean of the ratios, then dB.
[[nodiscard]] double mean_nmse_db(std::span<const double> linear);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
};

[[nodiscard]] MeanStd mean_std(std::span<const double> values);

} // namespace dsmdt
