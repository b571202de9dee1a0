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
#include <random>
#include <vector>

#include "dsmdt/metrics.hpp"

using namespace dsmdt;

namespace {

CMatrix random_matrix(std::mt19937_64 &g, Eigen::Index r, Eigen::Index c)
{
    std::normal_distribution<double> n;
    CMatrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = {n(g), n(g)};
    return m;
}

CpdFactors random_cpd(std::mt19937_64 &g, Eigen::Index U)
{
    CpdFactors f;
    f.A = random_matrix(g, 5, U);
    f.B = random_matrix(g, 4, U);
    f.C = random_matrix(g, 3, U);
    f.weights = random_matrix(g, U, 1);
    return f;
}

} // namespace

TEST_CASE("nmse reference points")
{
    std::mt19937_64 g(1);
    Tensor3 h(4, 3, 2);
    h.data() = random_matrix(g, 24, 1);
    CHECK(nmse(h, h) == 0.0);
    CHECK(to_db(nmse(h, h)) == kNmseFloorDb);
    CHECK(to_db(nmse(Tensor3(4, 3, 2), h)) == doctest::Approx(0.0));
    Tensor3 scaled = h;
    scaled *= 1.01;
    CHECK(to_db(nmse(scaled, h)) == doctest::Approx(-40.0).epsilon(1e-9));
}

TEST_CASE("nmse input checks")
{
    CHECK_THROWS((void)nmse(Tensor3(2, 2, 2), Tensor3(2, 2, 3)));
    CHECK_THROWS((void)nmse(Tensor3(2, 2, 2), Tensor3(2, 2, 2)));
}

TEST_CASE("factor-form nmse equals the materialized one")
{
    std::mt19937_64 g(8);
    for (int t = 0; t < 20; ++t) {
        const auto truth = random_cpd(g, 1 + t % 4);
        const auto est = random_cpd(g, 1 + (t + 1) % 5);
        const double direct = nmse(est.materialize(), truth.materialize());
        CHECK(nmse(est, truth) == doctest::Approx(direct).epsilon(1e-10));
    }
    const auto truth = random_cpd(g, 3);
    CHECK(nmse(truth, truth) < 1e-15);
}

TEST_CASE("dB conversion and aggregation")
{
    CHECK(to_db(0.1) == doctest::Approx(-10.0));
    CHECK(to_db(0.0) == kNmseFloorDb);
    CHECK(to_db(1e-20) == kNmseFloorDb);
    const std::vector<double> v{0.1, 0.001};
    CHECK(mean_nmse_db(v) == doctest::Approx(10.0 * std::log10(0.0505)));
    const auto ms = mean_std(std::vector<double>{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    CHECK(ms.mean == doctest::Approx(5.0));
    CHECK(ms.std == doctest::Approx(2.0));
}
