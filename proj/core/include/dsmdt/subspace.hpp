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
#include <functional>
#include <span>
#include <vector>

#include "dsmdt/tensor.hpp"

namespace dsmdt {

// Search interval [lo, hi) for a 1-D grid search followed by local refinement.
// Each refinement round re-samples +/- one previous step around the incumbent
// with the step shrunk by `refine_shrink`.
struct MusicGrid {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t coarse_points = 512;
    std::size_t refine_iters = 3;
    double refine_shrink = 0.1;
    bool periodic = true; // wrap neighbours across hi -> lo

    void validate() const;
    [[nodiscard]] double coarse_step() const noexcept { return (hi - lo) / static_cast<double>(coarse_points); }
    // Finest spacing reached after all refinement rounds.
    [[nodiscard]] double resolution() const noexcept;
    [[nodiscard]] double point(std::size_t i) const noexcept { return lo + coarse_step() * static_cast<double>(i); }
};

struct MusicGrid2d {
    MusicGrid first{0.0, 2.0, 64, 3, 0.1, true};
    MusicGrid second{0.0, 2.0, 64, 3, 0.1, true};
};

using Steering = std::function<CVector(double)>;

struct EigenSplit {
    RVector values;  // descending
    CMatrix vectors; // column i pairs with values[i]
};

// (1/n) X X^H for an m x n snapshot matrix.
[[nodiscard]] CMatrix sample_covariance(const CMatrix &X);

// Eigen-decomposition of a Hermitian matrix ordered by descending eigenvalue.
[[nodiscard]] EigenSplit hermitian_eigen(const CMatrix &R);

// Wax-Kailath MDL score for k = 0..max_sources.
[[nodiscard]] std::vector<double> mdl_scores(std::span<const double> eigenvalues, std::size_t snapshots,
                                             std::size_t max_sources);

// argmin of mdl_scores; eigenvalues must be non-negative and descending.
// Eigenvalues below 1e-13 of the largest are treated as equal, so numerically
// rank-deficient covariances do not register spurious sources.
[[nodiscard]] std::size_t mdl_detect(std::span<const double> eigenvalues, std::size_t snapshots,
                                     std::size_t max_sources);

struct MusicResult {
    std::vector<double> estimates;   // ascending
    std::vector<double> peak_values; // pseudospectrum at each estimate
    bool degraded = false;           // fewer than L local maxima found
};

// Pseudospectrum 1 / ||E_n^H a(x)||^2 given orthonormal signal-subspace columns.
[[nodiscard]] double music_pseudospectrum(const CMatrix &signal_subspace, const CVector &a);

[[nodiscard]] std::vector<double> music_spectrum(const CMatrix &R, std::size_t L, const Steering &steering,
                                                 std::span<const double> xs);

// L largest strict local maxima of the pseudospectrum, each refined on the grid.
[[nodiscard]] MusicResult music_1d(const CMatrix &R, std::size_t L, const Steering &steering, const MusicGrid &grid);
[[nodiscard]] MusicResult music_1d_subspace(const CMatrix &signal_subspace, const Steering &steering,
                                            const MusicGrid &grid, std::size_t L);

// Theta^T a_{N1,N2}(omega, psi).
[[nodiscard]] CVector ris_response(const CMatrix &theta, std::size_t N1, std::size_t N2, double omega, double psi);

struct Peak2d {
    double omega = 0.0;
    double psi = 0.0;
    double score = 0.0; // |a~^H r| / (||a~|| ||r||), in [0, 1]
    bool low_confidence = false;
};

// Correlation search of a single-path RIS response r ~ beta * Theta^T a(omega, psi).
// The coarse grid responses are precomputed once per Theta and reused across
// columns.
class RisCorrelator {
public:
    RisCorrelator(const CMatrix &theta, std::size_t N1, std::size_t N2, MusicGrid2d grid = {},
                  double confidence_floor = 0.9);

    [[nodiscard]] Peak2d estimate(const CVector &r) const;
    [[nodiscard]] double objective(const CVector &r, double omega, double psi) const;

private:
    // Q x (|omegas| * |psis|) responses, omega index varying slowest.
    [[nodiscard]] CMatrix responses(std::span<const double> omegas, std::span<const double> psis) const;

    CMatrix theta_;
    std::size_t n1_;
    std::size_t n2_;
    MusicGrid2d grid_;
    double floor_;
    std::vector<double> coarse_omega_;
    std::vector<double> coarse_psi_;
    CMatrix coarse_;
    RVector coarse_norm2_;
};

[[nodiscard]] Peak2d correlate_2d(const CVector &r, const CMatrix &theta, std::size_t N1, std::size_t N2,
                                  const MusicGrid2d &grid = {});

} // namespace dsmdt
