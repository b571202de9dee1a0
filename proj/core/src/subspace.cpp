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

#include "dsmdt/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dsmdt/channel.hpp"

namespace dsmdt {

namespace {

double wrap_into(double x, const MusicGrid &g)
{
    if (!g.periodic)
        return std::clamp(x, g.lo, g.hi);
    const double span = g.hi - g.lo;
    double y = std::fmod(x - g.lo, span);
    if (y < 0.0)
        y += span;
    return g.lo + y;
}

std::size_t half_width(const MusicGrid &g)
{
    return static_cast<std::size_t>(std::ceil(1.0 / g.refine_shrink - 1e-9));
}

// Local sample positions for refinement round `round` (1-based) around x.
std::vector<double> local_points(const MusicGrid &g, double x, std::size_t round)
{
    const double step = g.coarse_step() * std::pow(g.refine_shrink, static_cast<double>(round));
    const auto hw = static_cast<long>(half_width(g));
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(2 * hw + 1));
    for (long k = -hw; k <= hw; ++k)
        pts.push_back(wrap_into(x + static_cast<double>(k) * step, g));
    return pts;
}

} // namespace

void MusicGrid::validate() const
{
    if (!(lo < hi))
        throw std::invalid_argument("MusicGrid: lo must be below hi");
    if (coarse_points < 8)
        throw std::invalid_argument("MusicGrid: need at least 8 coarse points");
    if (!(refine_shrink > 0.0 && refine_shrink < 1.0))
        throw std::invalid_argument("MusicGrid: refine_shrink must lie in (0, 1)");
}

double MusicGrid::resolution() const noexcept
{
    return coarse_step() * std::pow(refine_shrink, static_cast<double>(refine_iters));
}

CMatrix sample_covariance(const CMatrix &X)
{
    if (X.cols() == 0 || X.rows() == 0)
        throw std::invalid_argument("sample_covariance: need at least one snapshot");
    CMatrix R = CMatrix::Zero(X.rows(), X.rows());
    R.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(X.cols()));
    R.triangularView<Eigen::StrictlyUpper>() = R.adjoint();
    return R;
}

EigenSplit hermitian_eigen(const CMatrix &R)
{
    if (R.rows() != R.cols() || R.rows() == 0)
        throw std::invalid_argument("hermitian_eigen: matrix must be square and non-empty");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(R);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigen: eigen-decomposition failed");
    // Eigen returns ascending order.
    EigenSplit out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

std::vector<double> mdl_scores(std::span<const double> eigenvalues, std::size_t snapshots, std::size_t max_sources)
{
    if (eigenvalues.empty())
        throw std::invalid_argument("mdl_detect: empty eigenvalue spectrum");
    if (snapshots == 0)
        throw std::invalid_argument("mdl_detect: need at least one snapshot");
    const std::size_t m = eigenvalues.size();
    const double top = eigenvalues.front();
    if (eigenvalues.back() < -1e-12 * std::abs(top))
        throw std::invalid_argument("mdl_detect: eigenvalues must be non-negative");
    for (std::size_t i = 1; i < m; ++i)
        if (eigenvalues[i] > eigenvalues[i - 1] * (1.0 + 1e-12) + 1e-300)
            throw std::invalid_argument("mdl_detect: eigenvalues must be descending");

    const double floor = std::max(top * 1e-13, std::numeric_limits<double>::min());
    std::vector<double> lam(m);
    std::transform(eigenvalues.begin(), eigenvalues.end(), lam.begin(),
                   [floor](double v) { return std::max(v, floor); });

    const double n = static_cast<double>(snapshots);
    const std::size_t kmax = std::min(max_sources, m - 1);
    std::vector<double> scores(kmax + 1);
    for (std::size_t k = 0; k <= kmax; ++k) {
        const std::size_t tail = m - k;
        double log_sum = 0.0;
        double sum = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            log_sum += std::log(lam[i]);
            sum += lam[i];
        }
        const double log_geo = log_sum / static_cast<double>(tail);
        const double log_arith = std::log(sum / static_cast<double>(tail));
        const double kd = static_cast<double>(k);
        const double md = static_cast<double>(m);
        scores[k] = -n * static_cast<double>(tail) * (log_geo - log_arith) + 0.5 * kd * (2.0 * md - kd) * std::log(n);
    }
    return scores;
}

std::size_t mdl_detect(std::span<const double> eigenvalues, std::size_t snapshots, std::size_t max_sources)
{
    const auto scores = mdl_scores(eigenvalues, snapshots, max_sources);
    return static_cast<std::size_t>(std::distance(scores.begin(), std::min_element(scores.begin(), scores.end())));
}

double music_pseudospectrum(const CMatrix &signal_subspace, const CVector &a)
{
    const CVector residual = a - signal_subspace * (signal_subspace.adjoint() * a);
    const double d = residual.squaredNorm();
    return 1.0 / std::max(d, std::numeric_limits<double>::min());
}

namespace {

CMatrix signal_subspace_of(const CMatrix &R, std::size_t L)
{
    if (R.rows() != R.cols())
        throw std::invalid_argument("music: covariance must be square");
    if (L == 0 || L >= static_cast<std::size_t>(R.rows()))
        throw std::invalid_argument("music: need 0 < L < m");
    const auto eig = hermitian_eigen(R);
    return eig.vectors.leftCols(static_cast<Eigen::Index>(L));
}

} // namespace

std::vector<double> music_spectrum(const CMatrix &R, std::size_t L, const Steering &steering,
                                   std::span<const double> xs)
{
    const CMatrix Es = signal_subspace_of(R, L);
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs)
        out.push_back(music_pseudospectrum(Es, steering(x)));
    return out;
}

MusicResult music_1d_subspace(const CMatrix &Es, const Steering &steering, const MusicGrid &grid, std::size_t L)
{
    grid.validate();
    const std::size_t n = grid.coarse_points;
    std::vector<double> spec(n);
    for (std::size_t i = 0; i < n; ++i)
        spec[i] = music_pseudospectrum(Es, steering(grid.point(i)));

    // Strict local maxima, circular in periodic domains.
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const bool has_left = grid.periodic || i > 0;
        const bool has_right = grid.periodic || i + 1 < n;
        const double left = has_left ? spec[(i + n - 1) % n] : -1.0;
        const double right = has_right ? spec[(i + 1) % n] : -1.0;
        if (spec[i] > left && spec[i] > right)
            peaks.push_back(i);
    }
    // Highest first; equal values resolve to the smaller parameter.
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return spec[a] > spec[b]; });

    MusicResult res;
    res.degraded = peaks.size() < L;
    const std::size_t take = std::min(L, peaks.size());

    std::vector<std::pair<double, double>> found;
    for (std::size_t p = 0; p < take; ++p) {
        double best_x = grid.point(peaks[p]);
        double best_v = spec[peaks[p]];
        for (std::size_t round = 1; round <= grid.refine_iters; ++round) {
            for (double x : local_points(grid, best_x, round)) {
                const double v = music_pseudospectrum(Es, steering(x));
                if (v > best_v) {
                    best_v = v;
                    best_x = x;
                }
            }
        }
        found.emplace_back(best_x, best_v);
    }
    std::sort(found.begin(), found.end());
    for (const auto &[x, v] : found) {
        res.estimates.push_back(x);
        res.peak_values.push_back(v);
    }
    return res;
}

MusicResult music_1d(const CMatrix &R, std::size_t L, const Steering &steering, const MusicGrid &grid)
{
    return music_1d_subspace(signal_subspace_of(R, L), steering, grid, L);
}

CVector ris_response(const CMatrix &theta, std::size_t N1, std::size_t N2, double omega, double psi)
{
    if (static_cast<std::size_t>(theta.rows()) != N1 * N2)
        throw std::invalid_argument("ris_response: theta must have N1*N2 rows");
    return theta.transpose() * steer_upa(N1, N2, omega, psi);
}

RisCorrelator::RisCorrelator(const CMatrix &theta, std::size_t N1, std::size_t N2, MusicGrid2d grid,
                             double confidence_floor)
    : theta_(theta), n1_(N1), n2_(N2), grid_(grid), floor_(confidence_floor)
{
    if (static_cast<std::size_t>(theta.rows()) != N1 * N2)
        throw std::invalid_argument("RisCorrelator: theta must have N1*N2 rows");
    grid_.first.validate();
    grid_.second.validate();
    for (std::size_t i = 0; i < grid_.first.coarse_points; ++i)
        coarse_omega_.push_back(grid_.first.point(i));
    for (std::size_t i = 0; i < grid_.second.coarse_points; ++i)
        coarse_psi_.push_back(grid_.second.point(i));
    coarse_ = responses(coarse_omega_, coarse_psi_);
    coarse_norm2_ = coarse_.colwise().squaredNorm().transpose();
}

CMatrix RisCorrelator::responses(std::span<const double> omegas, std::span<const double> psis) const
{
    RVector wo = Eigen::Map<const RVector>(omegas.data(), static_cast<Eigen::Index>(omegas.size()));
    RVector wp = Eigen::Map<const RVector>(psis.data(), static_cast<Eigen::Index>(psis.size()));
    const CMatrix A1 = steer_ula_matrix(n1_, wo);
    const CMatrix A2t = steer_ula_matrix(n2_, wp).transpose();
    const auto n1 = static_cast<Eigen::Index>(n1_);
    const auto n2 = static_cast<Eigen::Index>(n2_);
    CMatrix out(theta_.cols(), wo.size() * wp.size());
    for (Eigen::Index q = 0; q < theta_.cols(); ++q) {
        // Column q reshaped as N2 x N1 is Theta_q^T, with Theta_q(n1, n2) = theta(n1*N2 + n2, q).
        Eigen::Map<const CMatrix> theta_qt(theta_.col(q).data(), n2, n1);
        const CMatrix t = A2t * theta_qt * A1; // |psi| x |omega|
        out.row(q) = Eigen::Map<const CVector>(t.data(), t.size()).transpose();
    }
    return out;
}

double RisCorrelator::objective(const CVector &r, double omega, double psi) const
{
    const CVector a = ris_response(theta_, n1_, n2_, omega, psi);
    const double an = a.norm();
    if (an == 0.0)
        return 0.0;
    return std::abs(a.dot(r)) / an;
}

Peak2d RisCorrelator::estimate(const CVector &r) const
{
    if (r.size() != theta_.cols())
        throw std::invalid_argument("RisCorrelator: response length must equal Q");
    const double rn2 = r.squaredNorm();

    auto best_of = [&](const CMatrix &resp, const RVector &norm2, std::size_t &best) {
        const RVector corr = (resp.adjoint() * r).cwiseAbs2();
        double best_v = -1.0;
        for (Eigen::Index i = 0; i < corr.size(); ++i) {
            const double v = norm2[i] > 0.0 ? corr[i] / norm2[i] : 0.0;
            if (v > best_v) {
                best_v = v;
                best = static_cast<std::size_t>(i);
            }
        }
        return best_v;
    };

    std::size_t idx = 0;
    double best_v = best_of(coarse_, coarse_norm2_, idx);
    double omega = coarse_omega_[idx / coarse_psi_.size()];
    double psi = coarse_psi_[idx % coarse_psi_.size()];

    const std::size_t rounds = std::max(grid_.first.refine_iters, grid_.second.refine_iters);
    for (std::size_t round = 1; round <= rounds; ++round) {
        const auto wo = round <= grid_.first.refine_iters ? local_points(grid_.first, omega, round)
                                                          : std::vector<double>{omega};
        const auto wp = round <= grid_.second.refine_iters ? local_points(grid_.second, psi, round)
                                                           : std::vector<double>{psi};
        const CMatrix resp = responses(wo, wp);
        const RVector n2 = resp.colwise().squaredNorm().transpose();
        std::size_t li = 0;
        const double v = best_of(resp, n2, li);
        if (v > best_v) {
            best_v = v;
            omega = wo[li / wp.size()];
            psi = wp[li % wp.size()];
        }
    }

    Peak2d out;
    out.omega = omega;
    out.psi = psi;
    out.score = rn2 > 0.0 ? std::sqrt(std::max(best_v, 0.0) / rn2) : 0.0;
    out.low_confidence = out.score < floor_;
    return out;
}

Peak2d correlate_2d(const CVector &r, const CMatrix &theta, std::size_t N1, std::size_t N2, const MusicGrid2d &grid)
{
    if (r.squaredNorm() == 0.0)
        throw std::invalid_argument("correlate_2d: response vector must be nonzero");
    return RisCorrelator(theta, N1, N2, grid).estimate(r);
}

} // namespace dsmdt
