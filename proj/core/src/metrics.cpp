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

#include "dsmdt/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace dsmdt {

double nmse(const Tensor3 &h_hat, const Tensor3 &h_true)
{
    if (h_hat.dims() != h_true.dims())
        throw std::invalid_argument("nmse: dimension mismatch");
    const double ref = h_true.squared_norm();
    if (!(ref > 0.0))
        throw std::invalid_argument("nmse: zero-energy reference");
    return (h_hat.data() - h_true.data()).squaredNorm() / ref;
}

namespace {

CMatrix hcat(const CMatrix &a, const CMatrix &b)
{
    CMatrix out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

double cp_energy(const CMatrix &A, const CMatrix &B, const CMatrix &C, const CVector &w)
{
    const CMatrix G = (A.adjoint() * A).cwiseProduct(B.adjoint() * B).cwiseProduct(C.adjoint() * C);
    return std::max(0.0, w.dot(G * w).real());
}

} // namespace

double nmse(const CpdFactors &est, const CpdFactors &truth)
{
    if (est.A.rows() != truth.A.rows() || est.B.rows() != truth.B.rows() || est.C.rows() != truth.C.rows())
        throw std::invalid_argument("nmse: dimension mismatch");
    const double ref = cp_energy(truth.A, truth.B, truth.C, truth.weights);
    if (!(ref > 0.0))
        throw std::invalid_argument("nmse: zero-energy reference");
    CVector w(est.weights.size() + truth.weights.size());
    w << est.weights, -truth.weights;
    return cp_energy(hcat(est.A, truth.A), hcat(est.B, truth.B), hcat(est.C, truth.C), w) / ref;
}

double to_db(double linear)
{
    if (!(linear > 0.0))
        return kNmseFloorDb;
    return std::max(kNmseFloorDb, 10.0 * std::log10(linear));
}

double mean_nmse_db(std::span<const double> linear)
{
    if (linear.empty())
        return std::nan("");
    double acc = 0.0;
    for (double v : linear)
        acc += v;
    return to_db(acc / static_cast<double>(linear.size()));
}

MeanStd mean_std(std::span<const double> values)
{
    MeanStd out;
    if (values.empty())
        return {std::nan(""), std::nan("")};
    for (double v : values)
        out.mean += v;
    out.mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values)
        acc += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(acc / static_cast<double>(values.size()));
    return out;
}

} // namespace dsmdt
