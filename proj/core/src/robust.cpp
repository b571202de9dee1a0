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

#include "dsmdt/robust.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace dsmdt {

double wrap_period(double x, double period)
{
    double y = std::fmod(x, period);
    if (y < 0.0)
        y += period;
    if (y >= period)
        y -= period;
    return y;
}

double wrap_centered(double x, double period)
{
    return wrap_period(x + 0.5 * period, period) - 0.5 * period;
}

double circular_distance(double a, double b, double period)
{
    return std::abs(wrap_centered(a - b, period));
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw std::invalid_argument("median of an empty set");
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1)
        return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

std::vector<bool> mad_inliers(std::span<const double> values, double threshold, double floor)
{
    if (values.empty())
        return {};
    const double med = median({values.begin(), values.end()});
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values)
        dev.push_back(std::abs(v - med));
    const double scale = std::max(kMadScale * median(dev), floor);
    std::vector<bool> keep;
    keep.reserve(values.size());
    for (double d : dev)
        keep.push_back(d <= threshold * scale);
    return keep;
}

OffsetMatch match_offset(std::span<const double> anchor, std::span<const double> other, double period,
                         double tolerance)
{
    OffsetMatch best;
    best.partner.assign(anchor.size(), kNoPartner);
    if (anchor.empty() || other.empty())
        return best;

    double best_residual = 0.0;
    bool have = false;
    for (double b : other)
        for (double a : anchor) {
            const double cand = wrap_period(b - a, period);
            std::size_t support = 0;
            double residual = 0.0;
            for (double x : anchor) {
                double d = period;
                for (double y : other)
                    d = std::min(d, circular_distance(x + cand, y, period));
                if (d <= tolerance) {
                    ++support;
                    residual += d;
                }
            }
            if (!have || support > best.support || (support == best.support && residual < best_residual - 1e-15)) {
                have = true;
                best.support = support;
                best.offset = cand;
                best_residual = residual;
            }
        }

    // One-to-one assignment by increasing residual.
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < anchor.size(); ++i)
        for (std::size_t j = 0; j < other.size(); ++j)
            pairs.emplace_back(circular_distance(anchor[i] + best.offset, other[j], period), i, j);
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> used(other.size(), false);
    for (const auto &[d, i, j] : pairs) {
        if (d > tolerance)
            break;
        if (best.partner[i] != kNoPartner || used[j])
            continue;
        best.partner[i] = j;
        used[j] = true;
    }

    // Re-centre the shift on the matched pairs.
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < anchor.size(); ++i) {
        const auto j = best.partner[i];
        if (j == kNoPartner)
            continue;
        acc += wrap_centered(other[j] - anchor[i] - best.offset, period);
        ++n;
    }
    if (n > 0)
        best.offset = wrap_period(best.offset + acc / static_cast<double>(n), period);
    return best;
}

} // namespace dsmdt
