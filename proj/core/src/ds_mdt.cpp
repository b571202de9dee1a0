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

#include "dsmdt/ds_mdt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dsmdt/rng.hpp"
#include "dsmdt/robust.hpp"

namespace dsmdt {

namespace {

constexpr double kDelayPeriod = 2.0;
constexpr double kAnglePeriod = 2.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

double delay_floor(const DsMdtOptions &o, std::size_t P)
{
    return o.delay_mad_floor > 0.0 ? o.delay_mad_floor : 0.5 / static_cast<double>(P);
}

double match_tol(const DsMdtOptions &o, std::size_t P)
{
    return o.match_tolerance > 0.0 ? o.match_tolerance : 0.5 / static_cast<double>(P);
}

RVector flatten(const RMatrix &m) { return Eigen::Map<const RVector>(m.data(), m.size()); }

CMatrix delay_factor(const RMatrix &tau, std::size_t P) { return steer_ula_matrix(P, flatten(tau)); }

CMatrix ris_factor(const RMatrix &omega, const RMatrix &psi, std::size_t N1, std::size_t N2)
{
    CMatrix D(idx(N1 * N2), omega.size());
    for (Eigen::Index u = 0; u < omega.size(); ++u)
        D.col(u) = steer_upa(N1, N2, omega.data()[u], psi.data()[u]);
    return D;
}

struct HermitianSolve {
    CMatrix x;
    bool ridge = false;
    bool singular = false;
};

// Solves G x = rhs for Hermitian PSD G. With `allow_ridge`, an ill-conditioned
// G is regularised instead of being reported singular.
HermitianSolve solve_gram(const CMatrix &G, const CMatrix &rhs, double limit, bool allow_ridge)
{
    HermitianSolve out;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(G);
    const RVector &lam = eig.eigenvalues();
    const double top = lam.maxCoeff();
    const double bottom = lam.minCoeff();
    if (!(top > 0.0)) {
        out.singular = true;
        out.x = CMatrix::Zero(G.cols(), rhs.cols());
        return out;
    }
    double ridge = 0.0;
    if (!(bottom > 0.0) || top / bottom > limit) {
        if (!allow_ridge) {
            out.singular = true;
            return out;
        }
        ridge = top / limit;
        out.ridge = true;
    }
    const RVector inv = (lam.array() + ridge).inverse().matrix();
    out.x = eig.eigenvectors() * (inv.asDiagonal() * (eig.eigenvectors().adjoint() * rhs));
    return out;
}

struct GainSolve {
    CVector beta;
    bool ridge = false;
    double residual = 0.0;
};

GainSolve solve_gains(const Tensor3 &y, const CMatrix &A, const CMatrix &B, const CMatrix &C, double limit)
{
    const auto [P, M, Q] = y.dims();
    const Eigen::Index U = A.cols();
    const CMatrix gram = (A.adjoint() * A).cwiseProduct(B.adjoint() * B).cwiseProduct(C.adjoint() * C);

    Eigen::Map<const CMatrix> y1(y.data().data(), idx(P), idx(M * Q));
    const CMatrix Z = A.adjoint() * y1; // U x MQ, column m + M q
    CVector rhs(U);
    for (Eigen::Index u = 0; u < U; ++u) {
        cdouble acc = 0.0;
        for (std::size_t q = 0; q < Q; ++q) {
            const cdouble cq = std::conj(C(idx(q), u));
            cdouble s = 0.0;
            for (std::size_t m = 0; m < M; ++m)
                s += Z(u, idx(m + M * q)) * std::conj(B(idx(m), u));
            acc += cq * s;
        }
        rhs[u] = acc;
    }

    const auto sol = solve_gram(gram, rhs, limit, true);
    GainSolve out;
    out.beta = sol.x.col(0);
    out.ridge = sol.ridge;
    const double y2 = y.squared_norm();
    const double fit = (out.beta.adjoint() * gram * out.beta).real()(0, 0);
    const double cross = out.beta.dot(rhs).real();
    out.residual = y2 > 0.0 ? std::max(0.0, y2 - 2.0 * cross + fit) / y2 : 0.0;
    return out;
}

RMatrix drop_columns(const RMatrix &m, const std::vector<bool> &keep)
{
    const auto n = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
    RMatrix out(m.rows(), n);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (keep[static_cast<std::size_t>(j)])
            out.col(c++) = m.col(j);
    return out;
}

// Robust mean of circular differences: centred on their median, MAD-filtered.
double robust_offset(std::vector<double> diffs, double period, double threshold, double floor)
{
    if (diffs.empty())
        return 0.0;
    const double centre = median(diffs);
    for (auto &d : diffs)
        d = centre + wrap_centered(d - centre, period);
    const auto keep = mad_inliers(diffs, threshold, floor);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        if (keep[i]) {
            acc += diffs[i];
            ++n;
        }
    return n > 0 ? acc / static_cast<double>(n) : centre;
}

std::size_t min_energy_ue(const MeasurementSet &ms)
{
    std::size_t best = 0;
    double best_e = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ms.users(); ++k) {
        const double e = ms.tensors[k].squared_norm();
        if (e < best_e) {
            best_e = e;
            best = k;
        }
    }
    return best;
}

CpdFactors channel_from_estimates(const RVector &phi, const UeEstimate &ue, const ArrayDims &dims)
{
    CpdFactors f;
    f.A = delay_factor(ue.tau, dims.P);
    f.B = aod_factor_expanded(phi, static_cast<std::size_t>(ue.tau.cols()), dims.M);
    f.C = ris_factor(ue.omega, ue.psi, dims.N1, dims.N2);
    f.weights = Eigen::Map<const CVector>(ue.beta.data(), ue.beta.size());
    return f;
}

} // namespace

std::size_t DsMdtOptions::known_l2_for(std::size_t ue) const
{
    if (known_l2.empty())
        throw std::invalid_argument("known-path mode needs known_l2");
    return known_l2.size() == 1 ? known_l2.front() : known_l2.at(ue);
}

Tensor3 EstimateReport::reconstructed(std::size_t ue) const { return ues.at(ue).channel.materialize(); }

std::size_t select_reference(const MeasurementSet &ms)
{
    if (ms.users() == 0)
        throw std::invalid_argument("select_reference: no UEs");
    std::size_t best = 0;
    double best_e = -1.0;
    for (std::size_t k = 0; k < ms.users(); ++k) {
        const double e = ms.tensors[k].squared_norm();
        if (e > best_e) {
            best_e = e;
            best = k;
        }
    }
    return best;
}

AodEstimate estimate_common_aod(const MeasurementSet &ms, std::optional<std::size_t> l1_known,
                                const DsMdtOptions &opts)
{
    if (ms.users() == 0)
        throw std::invalid_argument("estimate_common_aod: no UEs");
    const std::size_t M = ms.dims.M;
    CMatrix R = CMatrix::Zero(idx(M), idx(M));
    std::size_t snapshots = 0;
    for (const auto &y : ms.tensors) {
        const CMatrix y2 = unfold(y, 2);
        R.selfadjointView<Eigen::Lower>().rankUpdate(y2, 1.0);
        snapshots += static_cast<std::size_t>(y2.cols());
    }
    R.triangularView<Eigen::StrictlyUpper>() = R.adjoint();
    R /= static_cast<double>(snapshots);

    const auto eig = hermitian_eigen(R);
    AodEstimate out;
    out.eigenvalues = eig.values;

    std::size_t L1 = 0;
    if (l1_known) {
        L1 = *l1_known;
    } else {
        const std::size_t limit = opts.max_sources > 0 ? opts.max_sources : M - 1;
        std::vector<double> lam(eig.values.data(), eig.values.data() + eig.values.size());
        for (auto &v : lam)
            v = std::max(v, 0.0);
        L1 = mdl_detect(lam, snapshots, limit);
    }
    if (L1 == 0)
        throw EstimationError("no common paths detected");
    if (L1 >= M)
        throw EstimationError("path count must stay below the BS array size");

    const Steering steer = [M](double x) { return steer_ula(M, x); };
    const auto music = music_1d_subspace(eig.vectors.leftCols(idx(L1)), steer, opts.aod_grid, L1);
    if (music.estimates.empty())
        throw EstimationError("no common paths detected");
    out.phi = Eigen::Map<const RVector>(music.estimates.data(), idx(music.estimates.size()));
    out.l1 = music.estimates.size();
    out.degraded = music.degraded;
    return out;
}

std::vector<CMatrix> delay_snapshots(const Tensor3 &y, const RVector &phi)
{
    const auto [P, M, Q] = y.dims();
    const CMatrix Bc = aod_factor(phi, M);
    const CMatrix projected = Bc.completeOrthogonalDecomposition().solve(unfold(y, 2)); // L1 x PQ
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(projected.rows()));
    for (Eigen::Index l = 0; l < projected.rows(); ++l)
        out.push_back(mat_fold(projected.row(l).transpose(), P, Q));
    return out;
}

DelayEstimate estimate_reference_delays(const Tensor3 &y, const RVector &phi, std::size_t l2_init,
                                        const DsMdtOptions &opts, bool keep_all)
{
    const std::size_t P = y.dim(1);
    const std::size_t L1 = static_cast<std::size_t>(phi.size());
    if (L1 == 0)
        throw std::invalid_argument("estimate_reference_delays: empty AoD set");
    if (l2_init == 0 || l2_init >= P)
        throw std::invalid_argument("estimate_reference_delays: need 0 < l2_init < P");

    const auto snaps = delay_snapshots(y, phi);
    DelayEstimate out;
    std::size_t anchor = 0;
    double best = -1.0;
    for (std::size_t l = 0; l < L1; ++l) {
        const double e = snaps[l].squaredNorm();
        if (e > best) {
            best = e;
            anchor = l;
        }
    }
    out.anchor_row = anchor;

    const Steering steer = [P](double x) { return steer_ula(P, x); };
    std::vector<std::vector<double>> rows(L1);
    for (std::size_t l = 0; l < L1; ++l) {
        const auto res = music_1d(sample_covariance(snaps[l]), l2_init, steer, opts.delay_grid);
        rows[l] = res.estimates;
        out.degraded = out.degraded || res.degraded;
    }
    const auto &base = rows[anchor];
    if (base.empty())
        throw EstimationError("offset structure absent");

    const std::size_t n = base.size();
    // good[l][i]: anchor column i has a consistent partner in row l.
    std::vector<OffsetMatch> matches(L1);
    std::vector<std::vector<double>> resid(L1, std::vector<double>(n, 0.0));
    std::vector<std::vector<bool>> good(L1, std::vector<bool>(n, true));
    for (std::size_t l = 0; l < L1; ++l) {
        if (l == anchor)
            continue;
        matches[l] = match_offset(base, rows[l], kDelayPeriod, match_tol(opts, P));
        std::vector<double> e;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = matches[l].partner[i];
            if (j == kNoPartner) {
                good[l][i] = false;
                continue;
            }
            resid[l][i] = wrap_centered(rows[l][j] - base[i] - matches[l].offset, kDelayPeriod);
            e.push_back(resid[l][i]);
            where.push_back(i);
        }
        const auto inl = mad_inliers(e, opts.mad_threshold, delay_floor(opts, P));
        for (std::size_t t = 0; t < where.size(); ++t)
            good[l][where[t]] = inl[t];
    }

    std::vector<bool> keep(n, true);
    if (!keep_all)
        for (std::size_t l = 0; l < L1; ++l)
            for (std::size_t i = 0; i < n; ++i)
                keep[i] = keep[i] && good[l][i];
    auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    if (kept == 0) {
        // No column agrees in every row: fall back to the best-supported ones.
        std::vector<std::size_t> votes(n, 0);
        for (std::size_t l = 0; l < L1; ++l)
            for (std::size_t i = 0; i < n; ++i)
                votes[i] += (l != anchor && good[l][i]) ? 1 : 0;
        const std::size_t top = *std::max_element(votes.begin(), votes.end());
        for (std::size_t i = 0; i < n; ++i)
            keep[i] = votes[i] == top;
        kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
        out.relaxed = true;
    }
    out.l2 = kept;
    out.rejected = n - kept;
    out.offsets = RVector::Zero(idx(L1));
    out.tau.resize(idx(L1), idx(kept));
    for (std::size_t l = 0; l < L1; ++l) {
        if (l != anchor) {
            double acc = 0.0;
            std::size_t used = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (keep[i] && good[l][i]) {
                    acc += resid[l][i];
                    ++used;
                }
            const double shift = used > 0 ? acc / static_cast<double>(used) : 0.0;
            out.offsets[idx(l)] = wrap_centered(matches[l].offset + shift, kDelayPeriod);
        }
        Eigen::Index c = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!keep[i])
                continue;
            double v = base[i];
            if (l != anchor)
                v = good[l][i] ? rows[l][matches[l].partner[i]] : wrap_period(base[i] + out.offsets[idx(l)], kDelayPeriod);
            out.tau(idx(l), c++) = v;
        }
    }
    return out;
}

RMatrix estimate_other_delays(const Tensor3 &y, const RVector &phi, const RVector &offsets, std::size_t anchor_row,
                              std::size_t l2, const DsMdtOptions &opts)
{
    const std::size_t P = y.dim(1);
    if (offsets.size() != phi.size() || anchor_row >= static_cast<std::size_t>(phi.size()))
        throw std::invalid_argument("estimate_other_delays: offsets do not match the AoD set");
    if (l2 == 0 || l2 >= P)
        throw std::invalid_argument("estimate_other_delays: need 0 < l2 < P");
    const auto snaps = delay_snapshots(y, phi);
    const Steering steer = [P](double x) { return steer_ula(P, x); };
    const auto res = music_1d(sample_covariance(snaps[anchor_row]), l2, steer, opts.delay_grid);
    if (res.estimates.empty())
        throw EstimationError("no delay peaks for the anchor row");
    RMatrix tau(phi.size(), idx(res.estimates.size()));
    for (Eigen::Index i = 0; i < tau.cols(); ++i)
        for (Eigen::Index l = 0; l < tau.rows(); ++l)
            tau(l, i) = wrap_period(res.estimates[static_cast<std::size_t>(i)] + offsets[l], kDelayPeriod);
    return tau;
}

CMatrix ris_factor_ls(const Tensor3 &y, const CMatrix &A, const CMatrix &B, double limit)
{
    if (A.cols() != B.cols())
        throw std::invalid_argument("ris_factor_ls: factor column counts differ");
    const CMatrix K = khatri_rao(B, A);                       // PM x U
    const CMatrix W = unfold(y, 3) * K.conjugate();           // Q x U
    const CMatrix G = (B.adjoint() * B).cwiseProduct(A.adjoint() * A);
    const auto sol = solve_gram(G, W.transpose(), limit, false);
    if (sol.singular)
        throw EstimationError("factor collinearity");
    return sol.x.transpose();
}

AoaEstimate estimate_aoa(const Tensor3 &y, const RVector &phi, const RMatrix &tau, const RisCorrelator &correlator,
                         std::size_t anchor_row, const std::optional<std::pair<RVector, RVector>> &offsets,
                         const DsMdtOptions &opts)
{
    const auto [P, M, Q] = y.dims();
    (void)Q;
    const Eigen::Index L1 = tau.rows();
    const Eigen::Index L2 = tau.cols();
    if (L1 != phi.size() || anchor_row >= static_cast<std::size_t>(L1))
        throw std::invalid_argument("estimate_aoa: delay matrix does not match the AoD set");
    const CMatrix A = delay_factor(tau, P);
    const CMatrix B = aod_factor_expanded(phi, static_cast<std::size_t>(L2), M);
    const CMatrix Rhat = ris_factor_ls(y, A, B, opts.collinearity_limit);

    AoaEstimate out;
    out.omega.resize(L1, L2);
    out.psi.resize(L1, L2);
    const auto a = idx(anchor_row);

    if (!offsets) {
        for (Eigen::Index i = 0; i < L2; ++i)
            for (Eigen::Index l = 0; l < L1; ++l) {
                const auto peak = correlator.estimate(Rhat.col(i * L1 + l));
                out.omega(l, i) = peak.omega;
                out.psi(l, i) = peak.psi;
                out.scores.push_back(peak.score);
            }
        out.omega_offsets = RVector::Zero(L1);
        out.psi_offsets = RVector::Zero(L1);
        for (Eigen::Index l = 0; l < L1; ++l) {
            if (l == a)
                continue;
            std::vector<double> dw, dp;
            for (Eigen::Index i = 0; i < L2; ++i) {
                dw.push_back(wrap_centered(out.omega(l, i) - out.omega(a, i), kAnglePeriod));
                dp.push_back(wrap_centered(out.psi(l, i) - out.psi(a, i), kAnglePeriod));
            }
            out.omega_offsets[l] = robust_offset(dw, kAnglePeriod, opts.mad_threshold, opts.angle_mad_floor);
            out.psi_offsets[l] = robust_offset(dp, kAnglePeriod, opts.mad_threshold, opts.angle_mad_floor);
        }
        return out;
    }

    const auto &[dw, dp] = *offsets;
    if (dw.size() != L1 || dp.size() != L1)
        throw std::invalid_argument("estimate_aoa: offsets do not match the AoD set");
    out.omega_offsets = dw;
    out.psi_offsets = dp;
    for (Eigen::Index i = 0; i < L2; ++i) {
        const auto peak = correlator.estimate(Rhat.col(i * L1 + a));
        out.scores.push_back(peak.score);
        for (Eigen::Index l = 0; l < L1; ++l) {
            out.omega(l, i) = wrap_period(peak.omega + dw[l] - dw[a], kAnglePeriod);
            out.psi(l, i) = wrap_period(peak.psi + dp[l] - dp[a], kAnglePeriod);
        }
    }
    return out;
}

GainEstimate estimate_gains(const Tensor3 &y, const RVector &phi, const RMatrix &tau, const RMatrix &omega,
                            const RMatrix &psi, const CMatrix &theta, const ArrayDims &dims, std::size_t anchor_row,
                            bool detect_count, const DsMdtOptions &opts)
{
    const Eigen::Index L1 = tau.rows();
    const Eigen::Index L2 = tau.cols();
    if (omega.rows() != L1 || omega.cols() != L2 || psi.rows() != L1 || psi.cols() != L2 || phi.size() != L1)
        throw std::invalid_argument("estimate_gains: parameter matrices disagree in shape");

    auto solve = [&](const RMatrix &t, const RMatrix &w, const RMatrix &s) {
        const CMatrix A = delay_factor(t, dims.P);
        const CMatrix B = aod_factor_expanded(phi, static_cast<std::size_t>(t.cols()), dims.M);
        const CMatrix C = theta.transpose() * ris_factor(w, s, dims.N1, dims.N2);
        return solve_gains(y, A, B, C, opts.collinearity_limit * opts.collinearity_limit);
    };

    GainEstimate out;
    auto first = solve(tau, omega, psi);
    out.ridge = first.ridge;
    out.residual = first.residual;
    out.beta = Eigen::Map<const CMatrix>(first.beta.data(), L1, L2);
    out.kept.assign(static_cast<std::size_t>(L2), true);
    out.l2 = static_cast<std::size_t>(L2);

    if (!detect_count || L1 < 2 || L2 < 2)
        return out;

    // beta(l, i) / beta(anchor, i) is one complex constant per row for real
    // paths; test log-magnitude and phase of the ratio separately.
    const auto a = idx(anchor_row);
    std::vector<bool> keep(static_cast<std::size_t>(L2), true);
    auto reject = [&](const std::vector<double> &d, const std::vector<std::size_t> &where, double floor) {
        const auto inl = mad_inliers(d, opts.mad_threshold, floor);
        for (std::size_t t = 0; t < where.size(); ++t)
            if (!inl[t])
                keep[where[t]] = false;
    };
    const RVector power = out.beta.cwiseAbs2().colwise().sum().transpose();
    for (Eigen::Index i = 0; i < L2; ++i)
        if (!(power[i] > opts.gain_power_floor * power.maxCoeff()))
            keep[static_cast<std::size_t>(i)] = false;
    for (Eigen::Index l = 0; l < L1; ++l) {
        if (l == a)
            continue;
        std::vector<double> mag, phase;
        std::vector<std::size_t> where;
        for (Eigen::Index i = 0; i < L2; ++i) {
            const cdouble ratio = out.beta(l, i) / out.beta(a, i);
            const double m = std::log(std::abs(ratio));
            if (!std::isfinite(m)) {
                keep[static_cast<std::size_t>(i)] = false;
                continue;
            }
            mag.push_back(m);
            phase.push_back(std::arg(ratio));
            where.push_back(static_cast<std::size_t>(i));
        }
        if (where.empty())
            continue;
        const double centre = median(phase);
        for (auto &p : phase)
            p = wrap_centered(p - centre, 2.0 * std::numbers::pi);
        reject(mag, where, opts.gain_mad_floor);
        reject(phase, where, opts.gain_mad_floor);
    }
    const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    if (kept == 0 || kept == static_cast<std::size_t>(L2))
        return out;

    const auto second = solve(drop_columns(tau, keep), drop_columns(omega, keep), drop_columns(psi, keep));
    out.beta = Eigen::Map<const CMatrix>(second.beta.data(), L1, idx(kept));
    out.kept = keep;
    out.l2 = kept;
    out.ridge = out.ridge || second.ridge;
    out.residual = second.residual;
    out.resolved = true;
    return out;
}

double structure_inconsistency(const RMatrix &x, double period)
{
    if (x.rows() < 2 || x.cols() == 0)
        return 0.0;
    RVector d = x.row(0) - x.row(1);
    if (period > 0.0)
        for (Eigen::Index i = 0; i < d.size(); ++i)
            d[i] = d[0] + wrap_centered(d[i] - d[0], period);
    const double mu = d.mean();
    return (d.array() - mu).abs().maxCoeff();
}

double gain_structure_inconsistency(const CMatrix &beta)
{
    if (beta.rows() < 2 || beta.cols() == 0)
        return 0.0;
    RMatrix logmag(2, beta.cols());
    for (Eigen::Index i = 0; i < beta.cols(); ++i) {
        logmag(0, i) = std::log(std::abs(beta(0, i)));
        logmag(1, i) = std::log(std::abs(beta(1, i)));
    }
    if (!logmag.allFinite())
        return std::numeric_limits<double>::infinity();
    return structure_inconsistency(logmag);
}

bool validity_indicator(EstimateReport &report, double epsilon, std::size_t k0)
{
    const std::size_t K = report.ues.size();
    const std::size_t need = k0 > 0 ? k0 : (K + 1) / 2;
    std::size_t reliable = 0;
    bool warned = false;
    for (auto &ue : report.ues) {
        if (ue.tau.rows() < 2) {
            if (!warned)
                report.warnings.emplace_back("validity: fewer than two paths per row group; structure check skipped");
            warned = true;
            ue.tau_inconsistency = 0.0;
            ue.gain_inconsistency = 0.0;
            ue.reliable = true;
        } else {
            ue.tau_inconsistency = structure_inconsistency(ue.tau, kDelayPeriod);
            ue.gain_inconsistency = gain_structure_inconsistency(ue.beta);
            ue.reliable = ue.tau_inconsistency < epsilon && ue.gain_inconsistency < epsilon;
        }
        reliable += ue.reliable ? 1 : 0;
    }
    report.reliable_users = reliable;
    report.valid = reliable >= need;
    return report.valid;
}

namespace {

void finish_ue(UeEstimate &ue, const GainEstimate &g, const RVector &phi, const ArrayDims &dims)
{
    if (g.resolved) {
        ue.tau = drop_columns(ue.tau, g.kept);
        ue.omega = drop_columns(ue.omega, g.kept);
        ue.psi = drop_columns(ue.psi, g.kept);
        ue.columns_dropped = g.kept.size() - g.l2;
    }
    ue.beta = g.beta;
    ue.l2_hat = g.l2;
    ue.gain_ridge = g.ridge;
    ue.residual = g.residual;
    ue.channel = channel_from_estimates(phi, ue, dims);
}

std::size_t l2_hint(const DsMdtOptions &opts, std::size_t ue)
{
    return opts.known_paths ? opts.known_l2_for(ue) : opts.l2_init;
}

// Offset-sharing pass: the reference UE supplies delay/angle offsets and the
// anchor row; every other UE only searches its anchor row.
void estimate_shared(const MeasurementSet &ms, const DsMdtOptions &opts, const RisCorrelator &corr,
                     EstimateReport &rep)
{
    const std::size_t K = ms.users();
    const std::size_t ref = rep.reference;
    rep.ues.assign(K, UeEstimate{});

    auto t0 = Clock::now();
    const auto dref = estimate_reference_delays(ms.tensors[ref], rep.phi_hat, l2_hint(opts, ref), opts,
                                                opts.known_paths);
    rep.anchor_row = dref.anchor_row;
    rep.tau_offsets = dref.offsets;
    rep.delay_outliers = dref.rejected;
    if (dref.relaxed)
        rep.warnings.emplace_back("reference delays: no column consistent across rows; kept best-supported");
    rep.ues[ref].tau = dref.tau;
    for (std::size_t k = 0; k < K; ++k)
        if (k != ref)
            rep.ues[k].tau = estimate_other_delays(ms.tensors[k], rep.phi_hat, dref.offsets, dref.anchor_row,
                                                   l2_hint(opts, k), opts);
    rep.times.delay += seconds_since(t0);

    t0 = Clock::now();
    const auto aref = estimate_aoa(ms.tensors[ref], rep.phi_hat, rep.ues[ref].tau, corr, rep.anchor_row,
                                   std::nullopt, opts);
    rep.omega_offsets = aref.omega_offsets;
    rep.psi_offsets = aref.psi_offsets;
    rep.ues[ref].omega = aref.omega;
    rep.ues[ref].psi = aref.psi;
    rep.ues[ref].aoa_scores = aref.scores;
    const auto shared = std::make_optional(std::make_pair(aref.omega_offsets, aref.psi_offsets));
    for (std::size_t k = 0; k < K; ++k) {
        if (k == ref)
            continue;
        const auto ak = estimate_aoa(ms.tensors[k], rep.phi_hat, rep.ues[k].tau, corr, rep.anchor_row, shared, opts);
        rep.ues[k].omega = ak.omega;
        rep.ues[k].psi = ak.psi;
        rep.ues[k].aoa_scores = ak.scores;
    }
    rep.times.aoa += seconds_since(t0);

    t0 = Clock::now();
    for (std::size_t k = 0; k < K; ++k) {
        auto &ue = rep.ues[k];
        const bool detect = !opts.known_paths;
        const auto g = estimate_gains(ms.tensors[k], rep.phi_hat, ue.tau, ue.omega, ue.psi, ms.theta, ms.dims,
                                      rep.anchor_row, detect, opts);
        finish_ue(ue, g, rep.phi_hat, ms.dims);
    }
    rep.times.gain += seconds_since(t0);
}

// Every UE acts as its own reference; only the AoD estimate is shared.
void estimate_independent(const MeasurementSet &ms, const DsMdtOptions &opts, const RisCorrelator &corr,
                          EstimateReport &rep)
{
    const std::size_t K = ms.users();
    rep.ues.assign(K, UeEstimate{});
    for (std::size_t k = 0; k < K; ++k) {
        auto t0 = Clock::now();
        const auto d = estimate_reference_delays(ms.tensors[k], rep.phi_hat, l2_hint(opts, k), opts, opts.known_paths);
        rep.times.delay += seconds_since(t0);
        if (d.relaxed)
            rep.warnings.push_back("UE " + std::to_string(k) + " delays: no column consistent across rows");
        if (k == rep.reference) {
            rep.anchor_row = d.anchor_row;
            rep.tau_offsets = d.offsets;
            rep.delay_outliers = d.rejected;
        }
        auto &ue = rep.ues[k];
        ue.tau = d.tau;

        t0 = Clock::now();
        const auto a = estimate_aoa(ms.tensors[k], rep.phi_hat, ue.tau, corr, d.anchor_row, std::nullopt, opts);
        rep.times.aoa += seconds_since(t0);
        if (k == rep.reference) {
            rep.omega_offsets = a.omega_offsets;
            rep.psi_offsets = a.psi_offsets;
        }
        ue.omega = a.omega;
        ue.psi = a.psi;
        ue.aoa_scores = a.scores;

        t0 = Clock::now();
        const auto g = estimate_gains(ms.tensors[k], rep.phi_hat, ue.tau, ue.omega, ue.psi, ms.theta, ms.dims,
                                      d.anchor_row, !opts.known_paths, opts);
        rep.times.gain += seconds_since(t0);
        finish_ue(ue, g, rep.phi_hat, ms.dims);
    }
}

} // namespace

EstimateReport run_ds_mdt(const MeasurementSet &ms, const DsMdtOptions &opts)
{
    const auto start = Clock::now();
    EstimateReport rep;
    if (ms.users() == 0)
        throw std::invalid_argument("run_ds_mdt: no UEs");
    if (opts.known_paths && opts.known_l1 == 0)
        throw std::invalid_argument("run_ds_mdt: known-path mode needs known_l1");

    rep.reference = select_reference(ms);
    if (opts.p_mis > 0.0) {
        Rng rng(derive_seed(opts.misselect_seed, {kMisselectStream}));
        if (rng.uniform() < opts.p_mis) {
            rep.reference = min_energy_ue(ms);
            rep.reference_forced = true;
        }
    }

    try {
        auto t0 = Clock::now();
        const auto aod = estimate_common_aod(
            ms, opts.known_paths ? std::optional<std::size_t>(opts.known_l1) : std::nullopt, opts);
        rep.times.aod = seconds_since(t0);
        rep.phi_hat = aod.phi;
        rep.l1_hat = aod.l1;
        rep.aod_eigenvalues = aod.eigenvalues;
        if (aod.degraded)
            rep.warnings.emplace_back("AoD search found fewer peaks than the detected path count");
    } catch (const EstimationError &e) {
        rep.ok = false;
        rep.failure = e.what();
        rep.times.total = seconds_since(start);
        return rep;
    }

    const RisCorrelator corr(ms.theta, ms.dims.N1, ms.dims.N2, opts.aoa_grid);
    const std::size_t k0 = opts.k0;

    auto run_independent = [&](EstimateReport &r) {
        estimate_independent(ms, opts, corr, r);
        validity_indicator(r, opts.epsilon, k0);
        r.ok = true;
    };

    if (!opts.share_offsets) {
        try {
            run_independent(rep);
            rep.primary_valid = rep.valid;
        } catch (const EstimationError &e) {
            rep.ok = false;
            rep.failure = e.what();
        }
        rep.times.total = seconds_since(start);
        return rep;
    }

    std::string primary_error;
    try {
        estimate_shared(ms, opts, corr, rep);
        rep.primary_valid = validity_indicator(rep, opts.epsilon, k0);
        rep.ok = true;
    } catch (const EstimationError &e) {
        primary_error = e.what();
        rep.ok = false;
        rep.primary_valid = false;
    }

    if ((rep.ok && rep.primary_valid) || !opts.allow_fallback) {
        if (!rep.ok)
            rep.failure = primary_error;
        rep.times.total = seconds_since(start);
        return rep;
    }

    EstimateReport fb = rep;
    fb.warnings.push_back(primary_error.empty() ? "validity indicator failed; switched to independent estimation"
                                                : "offset-sharing pass failed (" + primary_error +
                                                      "); switched to independent estimation");
    fb.times.delay = fb.times.aoa = fb.times.gain = 0.0;
    try {
        run_independent(fb);
        auto total_residual = [](const EstimateReport &r) {
            double acc = 0.0;
            for (const auto &u : r.ues)
                acc += u.residual;
            return acc;
        };
        if (rep.ok && opts.fallback_by_residual && total_residual(rep) <= total_residual(fb)) {
            rep.warnings.emplace_back("validity indicator failed; independent estimate fit worse, kept shared pass");
            rep.times.total = seconds_since(start);
            return rep;
        }
        fb.fallback_used = true;
        fb.primary_valid = false;
        fb.times.total = seconds_since(start);
        return fb;
    } catch (const EstimationError &e) {
        if (rep.ok) {
            rep.warnings.push_back(std::string("fallback failed: ") + e.what());
            rep.times.total = seconds_since(start);
            return rep;
        }
        rep.failure = primary_error + "; fallback: " + e.what();
        rep.times.total = seconds_since(start);
        return rep;
    }
}

} // namespace dsmdt
