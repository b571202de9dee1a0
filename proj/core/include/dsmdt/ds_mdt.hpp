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
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsmdt/channel.hpp"
#include "dsmdt/scenario.hpp"
#include "dsmdt/subspace.hpp"

namespace dsmdt {

// Raised when a pipeline stage cannot produce an estimate (no common paths,
// missing offset structure, collinear factors).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DsMdtOptions {
    // Assumed UE-RIS path count fed to the delay search; should exceed the truth.
    std::size_t l2_init = 4;

    // Known-path-number mode: L1 and every L2 are taken from here, skipping MDL
    // and offset-based count detection.
    bool known_paths = false;
    std::size_t known_l1 = 0;
    std::vector<std::size_t> known_l2; // one value or one per UE

    // false: every UE is estimated on its own (no offset sharing across UEs).
    bool share_offsets = true;
    // Re-run without offset sharing when the validity indicator fails.
    bool allow_fallback = true;
    bool fallback_by_residual = true; // keep the shared pass if the fallback fits the data worse

    double epsilon = 0.1;
    std::size_t k0 = 0; // 0 selects ceil(K/2)

    // Probability of overriding the reference choice with the weakest UE.
    double p_mis = 0.0;
    std::uint64_t misselect_seed = 0;

    std::size_t max_sources = 0; // MDL search limit; 0 selects M - 1

    MusicGrid aod_grid{0.0, 1.0, 512, 3, 0.1, false};
    MusicGrid delay_grid{0.0, 2.0, 512, 3, 0.1, true};
    MusicGrid2d aoa_grid{};

    double mad_threshold = 3.0;
    double delay_mad_floor = 0.0; // 0 selects 0.5 / P
    double angle_mad_floor = 1e-3;
    double gain_mad_floor = 0.2; // natural-log units and radians
    // Columns whose gain energy falls below this fraction of the strongest
    // column are treated as empty.
    double gain_power_floor = 1e-6;
    double match_tolerance = 0.0; // 0 selects 0.5 / P

    // Condition-number limit for the factor least-squares solves.
    double collinearity_limit = 1e10;

    [[nodiscard]] std::size_t known_l2_for(std::size_t ue) const;
};

struct UeEstimate {
    RMatrix tau;   // L1_hat x L2_hat
    RMatrix omega;
    RMatrix psi;
    CMatrix beta;
    std::size_t l2_hat = 0;

    bool reliable = true;
    double tau_inconsistency = 0.0;  // D(tau)
    double gain_inconsistency = 0.0; // D(ln|beta|)
    bool gain_ridge = false;         // ill-conditioned gain solve was regularised
    std::size_t columns_dropped = 0;
    double residual = 0.0;           // ||Y - Y_hat||^2 / ||Y||^2
    std::vector<double> aoa_scores;

    CpdFactors channel; // reconstructed P x M x N channel in factor form
};

struct StageTimes {
    double aod = 0.0;
    double delay = 0.0;
    double aoa = 0.0;
    double gain = 0.0;
    double total = 0.0;
};

struct EstimateReport {
    bool ok = false;
    std::string failure;

    std::size_t reference = 0;
    bool reference_forced = false; // mis-selection injected
    RVector phi_hat;
    std::size_t l1_hat = 0;
    RVector aod_eigenvalues;
    std::size_t anchor_row = 0;

    RVector tau_offsets;   // row offsets relative to the anchor row
    RVector omega_offsets;
    RVector psi_offsets;
    std::size_t delay_outliers = 0; // reference columns removed by MAD

    std::vector<UeEstimate> ues;

    bool valid = false;         // indicator of the returned estimates
    bool primary_valid = false; // indicator of the offset-sharing pass
    bool fallback_used = false;
    std::size_t reliable_users = 0;
    std::vector<std::string> warnings;
    StageTimes times;

    [[nodiscard]] Tensor3 reconstructed(std::size_t ue) const;
};

// argmax_k ||Y^k||_F^2, ties to the smaller index.
[[nodiscard]] std::size_t select_reference(const MeasurementSet &ms);

struct AodEstimate {
    RVector phi; // ascending
    std::size_t l1 = 0;
    RVector eigenvalues;
    bool degraded = false;
};

// Joint MUSIC over the stacked mode-2 unfoldings of every UE; the path count
// comes from MDL unless `l1_known` is set.
[[nodiscard]] AodEstimate estimate_common_aod(const MeasurementSet &ms, std::optional<std::size_t> l1_known,
                                              const DsMdtOptions &opts = {});

struct DelayEstimate {
    RMatrix tau;     // L1_hat x L2_hat, rows paired by the common offset
    RVector offsets; // per row, relative to the anchor row
    std::size_t l2 = 0;
    std::size_t anchor_row = 0;
    std::size_t rejected = 0;
    bool degraded = false;
    bool relaxed = false; // no column was consistent in every row
};

// Per-row delay MUSIC on Mat(rows of B^+ Y_(2)) followed by offset pairing and
// MAD filtering. With `keep_all` the count is taken as given.
[[nodiscard]] DelayEstimate estimate_reference_delays(const Tensor3 &y, const RVector &phi, std::size_t l2_init,
                                                      const DsMdtOptions &opts = {}, bool keep_all = false);

// Anchor-row MUSIC for a non-reference UE; other rows follow from the offsets.
[[nodiscard]] RMatrix estimate_other_delays(const Tensor3 &y, const RVector &phi, const RVector &offsets,
                                            std::size_t anchor_row, std::size_t l2, const DsMdtOptions &opts = {});

// Mat(row) snapshots for every row of B^+ Y_(2): L1 matrices of size P x Q.
[[nodiscard]] std::vector<CMatrix> delay_snapshots(const Tensor3 &y, const RVector &phi);

// R_hat = Y_(3) [(B kr A)^T]^+ ; throws EstimationError on collinear factors.
[[nodiscard]] CMatrix ris_factor_ls(const Tensor3 &y, const CMatrix &A, const CMatrix &B, double limit = 1e10);

struct AoaEstimate {
    RMatrix omega;
    RMatrix psi;
    RVector omega_offsets;
    RVector psi_offsets;
    std::vector<double> scores;
};

// Reference UE: correlate every column. Otherwise only the anchor-row columns
// are searched and the remaining rows follow from `offsets` (omega, psi).
[[nodiscard]] AoaEstimate estimate_aoa(const Tensor3 &y, const RVector &phi, const RMatrix &tau,
                                       const RisCorrelator &correlator, std::size_t anchor_row,
                                       const std::optional<std::pair<RVector, RVector>> &offsets,
                                       const DsMdtOptions &opts = {});

struct GainEstimate {
    CMatrix beta;
    std::vector<bool> kept; // per column of the input matrices
    std::size_t l2 = 0;
    bool ridge = false;
    bool resolved = false; // second LS pass after dropping outliers
    double residual = 0.0;
};

// vec(beta) = G^+ vec(Y) with G columns a_P(tau_u) o a_M(phi_u) o Theta^T a_N(omega_u, psi_u).
// With `detect_count`, columns whose log-magnitude row differences are MAD
// outliers are dropped and the LS is solved once more.
[[nodiscard]] GainEstimate estimate_gains(const Tensor3 &y, const RVector &phi, const RMatrix &tau,
                                          const RMatrix &omega, const RMatrix &psi, const CMatrix &theta,
                                          const ArrayDims &dims, std::size_t anchor_row, bool detect_count,
                                          const DsMdtOptions &opts = {});

// ||d - mean(d)||_inf of the first-two-row difference; `period` > 0 wraps the
// difference circularly. The gain variant compares ln|beta|.
[[nodiscard]] double structure_inconsistency(const RMatrix &x, double period = 0.0);
[[nodiscard]] double gain_structure_inconsistency(const CMatrix &beta);

// k0-out-of-K vote over per-UE reliability (D(tau) < eps and D(beta) < eps).
// Updates each UE's reliability fields. Fewer than two rows counts as reliable
// with a warning.
bool validity_indicator(EstimateReport &report, double epsilon, std::size_t k0);

[[nodiscard]] EstimateReport run_ds_mdt(const MeasurementSet &ms, const DsMdtOptions &opts = {});

} // namespace dsmdt
