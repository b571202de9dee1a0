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
#include <vector>

#include "dsmdt/tensor.hpp"

namespace dsmdt {

// Multipath description of one link. Delays are normalized so that subcarrier
// p sees a phase exp(-j*pi*p*tau); angles are direction cosines feeding the
// half-wavelength steering vectors. `phi` (BS-side arrival angle) is only
// populated for the RIS-BS link.
struct LinkPaths {
    CVector gains;
    RVector tau;
    RVector omega;
    RVector psi;
    RVector phi;

    [[nodiscard]] std::size_t paths() const noexcept { return static_cast<std::size_t>(gains.size()); }
};

// Throws std::invalid_argument when field lengths disagree or the link is empty.
// `bs_side` additionally requires a phi entry per path.
void validate_link(const LinkPaths &link, bool bs_side);

struct ArrayDims {
    std::size_t P = 0;  // subcarriers
    std::size_t M = 0;  // BS antennas
    std::size_t N1 = 0; // RIS rows
    std::size_t N2 = 0; // RIS columns
    std::size_t Q = 0;  // pilot slots / RIS configurations

    [[nodiscard]] std::size_t N() const noexcept { return N1 * N2; }
};

struct ChannelScenario {
    LinkPaths ris_bs;
    std::vector<LinkPaths> ue_ris;
    std::vector<double> ue_distance; // metres, informational
    double bs_distance = 0.0;

    [[nodiscard]] std::size_t users() const noexcept { return ue_ris.size(); }
};

// Cascaded parameters of one UE. Rows index the RIS-BS path (l1), columns the
// UE-RIS path (l2); the linear path index is u = l2 * L1 + l1, which is also
// the column-major position in every matrix below.
struct CascadedParams {
    RVector phi;  // L1, shared by all UEs
    CMatrix beta; // L1 x L2
    RMatrix tau;
    RMatrix omega;
    RMatrix psi;

    [[nodiscard]] std::size_t L1() const noexcept { return static_cast<std::size_t>(beta.rows()); }
    [[nodiscard]] std::size_t L2() const noexcept { return static_cast<std::size_t>(beta.cols()); }
    [[nodiscard]] std::size_t U() const noexcept { return static_cast<std::size_t>(beta.size()); }
};

// Weighted CP factors: T = sum_u weights[u] * A(:,u) o B(:,u) o C(:,u).
struct CpdFactors {
    CMatrix A;
    CMatrix B;
    CMatrix C;
    CVector weights;

    [[nodiscard]] Tensor3 materialize() const;
};

// Half-wavelength ULA response, element i = exp(-j*pi*i*x) / X.
[[nodiscard]] CVector steer_ula(std::size_t X, double x);

// UPA response as kron(steer_ula(N1, x1), steer_ula(N2, x2)); element index n1*N2 + n2.
[[nodiscard]] CVector steer_upa(std::size_t N1, std::size_t N2, double x1, double x2);

// Matrix of ULA responses, one column per entry of `xs`.
[[nodiscard]] CMatrix steer_ula_matrix(std::size_t X, const RVector &xs);

// tau = 2 * fs * kappa / P for a physical delay kappa in seconds.
[[nodiscard]] double normalized_delay(double kappa_seconds, double sample_rate_hz, std::size_t P);

// RIS-BS channel G_p (M x N) on subcarrier p, summed over the link's paths.
[[nodiscard]] CMatrix ris_bs_channel(const LinkPaths &link, std::size_t p, const ArrayDims &dims);

// UE-RIS channel h_p (length N) on subcarrier p.
[[nodiscard]] CVector ue_ris_channel(const LinkPaths &link, std::size_t p, const ArrayDims &dims);

// G_p * diag(h_p), built directly from the two links.
[[nodiscard]] CMatrix cascaded_channel_direct(const LinkPaths &ris_bs, const LinkPaths &ue_ris, std::size_t p,
                                              const ArrayDims &dims);

// Same channel from the cascaded (summed) parameters.
[[nodiscard]] CMatrix cascaded_channel_mapped(const CascadedParams &c, std::size_t p, const ArrayDims &dims);

// beta_{l1,l2} = beta_l1 * beta_l2 / N: the Hadamard product of two UPA
// responses is the summed-angle response scaled by the extra 1/N, which the
// cascaded gain absorbs so that the mapped channel equals G_p diag(h_p).
[[nodiscard]] CascadedParams map_cascaded(const LinkPaths &ris_bs, const LinkPaths &ue_ris, std::size_t ris_elements);
[[nodiscard]] std::vector<CascadedParams> map_cascaded(const ChannelScenario &scenario, std::size_t ris_elements);

// Factors of the P x M x N channel tensor. B carries one (duplicated) column per u.
[[nodiscard]] CpdFactors channel_factors(const CascadedParams &c, const ArrayDims &dims);

// Factors of the noiseless P x M x Q measurement tensor: C = Theta^T D.
[[nodiscard]] CpdFactors measurement_factors(const CascadedParams &c, const CMatrix &theta, const ArrayDims &dims);

[[nodiscard]] Tensor3 synth_channel_tensor(const CascadedParams &c, const ArrayDims &dims);

// Throws std::invalid_argument if theta does not have N1*N2 rows.
[[nodiscard]] Tensor3 synth_measurement(const CascadedParams &c, const CMatrix &theta, const ArrayDims &dims);

// Compact M x L1 AoD factor and its U-column expansion (column u uses phi[u mod L1]).
[[nodiscard]] CMatrix aod_factor(const RVector &phi, std::size_t M);
[[nodiscard]] CMatrix aod_factor_expanded(const RVector &phi, std::size_t L2, std::size_t M);

} // namespace dsmdt
