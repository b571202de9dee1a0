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

#include "dsmdt/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsmdt {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

cdouble phase(double x) { return std::polar(1.0, -std::numbers::pi * x); }

} // namespace

void validate_link(const LinkPaths &link, bool bs_side)
{
    const auto n = link.gains.size();
    if (n == 0)
        throw std::invalid_argument("link must carry at least one path");
    if (link.tau.size() != n || link.omega.size() != n || link.psi.size() != n)
        throw std::invalid_argument("link field lengths disagree");
    if (bs_side && link.phi.size() != n)
        throw std::invalid_argument("RIS-BS link needs one phi per path");
}

Tensor3 CpdFactors::materialize() const
{
    return kruskal(A * weights.asDiagonal(), B, C);
}

CVector steer_ula(std::size_t X, double x)
{
    if (X == 0)
        throw std::invalid_argument("steer_ula: array size must be positive");
    CVector a(idx(X));
    const double scale = 1.0 / static_cast<double>(X);
    // Direct evaluation per element keeps the phase exact for large i.
    for (std::size_t i = 0; i < X; ++i)
        a[idx(i)] = scale * phase(static_cast<double>(i) * x);
    return a;
}

CVector steer_upa(std::size_t N1, std::size_t N2, double x1, double x2)
{
    return kron(steer_ula(N1, x1), steer_ula(N2, x2));
}

CMatrix steer_ula_matrix(std::size_t X, const RVector &xs)
{
    CMatrix out(idx(X), xs.size());
    for (Eigen::Index c = 0; c < xs.size(); ++c)
        out.col(c) = steer_ula(X, xs[c]);
    return out;
}

double normalized_delay(double kappa_seconds, double sample_rate_hz, std::size_t P)
{
    if (P == 0)
        throw std::invalid_argument("normalized_delay: P must be positive");
    return 2.0 * sample_rate_hz * kappa_seconds / static_cast<double>(P);
}

CMatrix ris_bs_channel(const LinkPaths &link, std::size_t p, const ArrayDims &dims)
{
    validate_link(link, true);
    CMatrix G = CMatrix::Zero(idx(dims.M), idx(dims.N()));
    for (Eigen::Index l = 0; l < link.gains.size(); ++l) {
        const cdouble w = link.gains[l] * phase(static_cast<double>(p) * link.tau[l]);
        G.noalias() += w * steer_ula(dims.M, link.phi[l]) *
                       steer_upa(dims.N1, dims.N2, link.omega[l], link.psi[l]).transpose();
    }
    return G;
}

CVector ue_ris_channel(const LinkPaths &link, std::size_t p, const ArrayDims &dims)
{
    validate_link(link, false);
    CVector h = CVector::Zero(idx(dims.N()));
    for (Eigen::Index l = 0; l < link.gains.size(); ++l)
        h += link.gains[l] * phase(static_cast<double>(p) * link.tau[l]) *
             steer_upa(dims.N1, dims.N2, link.omega[l], link.psi[l]);
    return h;
}

CMatrix cascaded_channel_direct(const LinkPaths &ris_bs, const LinkPaths &ue_ris, std::size_t p,
                                const ArrayDims &dims)
{
    return ris_bs_channel(ris_bs, p, dims) * ue_ris_channel(ue_ris, p, dims).asDiagonal();
}

CMatrix cascaded_channel_mapped(const CascadedParams &c, std::size_t p, const ArrayDims &dims)
{
    CMatrix H = CMatrix::Zero(idx(dims.M), idx(dims.N()));
    for (Eigen::Index l2 = 0; l2 < c.beta.cols(); ++l2)
        for (Eigen::Index l1 = 0; l1 < c.beta.rows(); ++l1) {
            const cdouble w = c.beta(l1, l2) * phase(static_cast<double>(p) * c.tau(l1, l2));
            H.noalias() += w * steer_ula(dims.M, c.phi[l1]) *
                           steer_upa(dims.N1, dims.N2, c.omega(l1, l2), c.psi(l1, l2)).transpose();
        }
    return H;
}

CascadedParams map_cascaded(const LinkPaths &ris_bs, const LinkPaths &ue_ris, std::size_t ris_elements)
{
    if (ris_elements == 0)
        throw std::invalid_argument("map_cascaded: RIS element count must be positive");
    validate_link(ris_bs, true);
    validate_link(ue_ris, false);
    const auto L1 = ris_bs.gains.size();
    const auto L2 = ue_ris.gains.size();
    CascadedParams c;
    c.phi = ris_bs.phi;
    c.beta.resize(L1, L2);
    c.tau.resize(L1, L2);
    c.omega.resize(L1, L2);
    c.psi.resize(L1, L2);
    const double scale = 1.0 / static_cast<double>(ris_elements);
    for (Eigen::Index l2 = 0; l2 < L2; ++l2)
        for (Eigen::Index l1 = 0; l1 < L1; ++l1) {
            c.beta(l1, l2) = ris_bs.gains[l1] * ue_ris.gains[l2] * scale;
            c.tau(l1, l2) = ris_bs.tau[l1] + ue_ris.tau[l2];
            c.omega(l1, l2) = ris_bs.omega[l1] + ue_ris.omega[l2];
            c.psi(l1, l2) = ris_bs.psi[l1] + ue_ris.psi[l2];
        }
    return c;
}

std::vector<CascadedParams> map_cascaded(const ChannelScenario &scenario, std::size_t ris_elements)
{
    std::vector<CascadedParams> out;
    out.reserve(scenario.users());
    for (const auto &ue : scenario.ue_ris)
        out.push_back(map_cascaded(scenario.ris_bs, ue, ris_elements));
    return out;
}

CMatrix aod_factor(const RVector &phi, std::size_t M) { return steer_ula_matrix(M, phi); }

CMatrix aod_factor_expanded(const RVector &phi, std::size_t L2, std::size_t M)
{
    const CMatrix compact = aod_factor(phi, M);
    CMatrix B(idx(M), compact.cols() * idx(L2));
    for (std::size_t l2 = 0; l2 < L2; ++l2)
        B.middleCols(idx(l2) * compact.cols(), compact.cols()) = compact;
    return B;
}

CpdFactors channel_factors(const CascadedParams &c, const ArrayDims &dims)
{
    const auto U = idx(c.U());
    CpdFactors f;
    f.A.resize(idx(dims.P), U);
    f.C.resize(idx(dims.N()), U);
    f.weights = Eigen::Map<const CVector>(c.beta.data(), U);
    for (Eigen::Index u = 0; u < U; ++u) {
        f.A.col(u) = steer_ula(dims.P, c.tau.data()[u]);
        f.C.col(u) = steer_upa(dims.N1, dims.N2, c.omega.data()[u], c.psi.data()[u]);
    }
    f.B = aod_factor_expanded(c.phi, c.L2(), dims.M);
    return f;
}

CpdFactors measurement_factors(const CascadedParams &c, const CMatrix &theta, const ArrayDims &dims)
{
    if (static_cast<std::size_t>(theta.rows()) != dims.N())
        throw std::invalid_argument("measurement_factors: theta must have N1*N2 rows");
    CpdFactors f = channel_factors(c, dims);
    f.C = theta.transpose() * f.C;
    return f;
}

Tensor3 synth_channel_tensor(const CascadedParams &c, const ArrayDims &dims)
{
    return channel_factors(c, dims).materialize();
}

Tensor3 synth_measurement(const CascadedParams &c, const CMatrix &theta, const ArrayDims &dims)
{
    return measurement_factors(c, theta, dims).materialize();
}

} // namespace dsmdt
