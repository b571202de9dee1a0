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
#include <limits>
#include <span>
#include <vector>

namespace dsmdt {

// x mod period, in [0, period).
[[nodiscard]] double wrap_period(double x, double period);
// x mod period, in [-period/2, period/2).
[[nodiscard]] double wrap_centered(double x, double period);
[[nodiscard]] double circular_distance(double a, double b, double period);

[[nodiscard]] double median(std::vector<double> values);

// 1 / (sqrt(2) * erfcinv(3/2)): scales the MAD to a Gaussian sigma.
inline constexpr double kMadScale = 1.482602218505602;

// Median-absolute-deviation outlier test (same rule as MATLAB's rmoutliers
// default): x is kept iff |x - median| <= threshold * max(kMadScale * MAD, floor).
// `floor` keeps exactly-consistent data (MAD = 0) from rejecting values that
// differ only by round-off.
[[nodiscard]] std::vector<bool> mad_inliers(std::span<const double> values, double threshold = 3.0,
                                            double floor = 0.0);

inline constexpr std::size_t kNoPartner = std::numeric_limits<std::size_t>::max();

struct OffsetMatch {
    double offset = 0.0;          // other ~ anchor + offset (mod period)
    std::vector<std::size_t> partner; // per anchor entry, index into `other` or kNoPartner
    std::size_t support = 0;      // anchor entries matched within tolerance
};

// Finds the common shift between two sets of circular values. Every pairwise
// difference is a candidate; the one matching the most anchor entries within
// `tolerance` wins (ties: smaller total residual). Partners are then assigned
// one-to-one by increasing residual, so spurious entries in either set do not
// disturb the pairing of the consistent ones. Entries with nothing inside the
// tolerance keep kNoPartner.
[[nodiscard]] OffsetMatch match_offset(std::span<const double> anchor, std::span<const double> other, double period,
                                       double tolerance);

} // namespace dsmdt
