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

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace dsmdt {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Dense complex 3-way array with dimension 1 running fastest in memory:
// element (i, j, k) lives at i + d1 * (j + d2 * k).
//
// Unfolding convention (Kronecker-consistent):
//   mode-1: d1 x (d2*d3), column j + d2*k
//   mode-2: d2 x (d1*d3), column i + d1*k
//   mode-3: d3 x (d1*d2), column i + d1*j
// With this layout, for T = [[A, B, C]] (sum of a_u o b_u o c_u):
//   T_(1) = A (C kr B)^T,  T_(2) = B (C kr A)^T,  T_(3) = C (B kr A)^T,
//   vec(T) = (C kr B kr A) 1
// where "kr" is the Khatri-Rao product with the left factor varying slowest.
// Note that a row-major mapping (m, q) -> m*Q + q for mode 1 would NOT satisfy
// the first identity; the column order above is the one the identities need.
class Tensor3 {
public:
    using Dims = std::array<std::size_t, 3>;

    Tensor3() = default;
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3);
    Tensor3(Dims dims, CVector data);

    [[nodiscard]] const Dims &dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t dim(int mode) const;
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }

    [[nodiscard]] cdouble &operator()(std::size_t i, std::size_t j, std::size_t k) noexcept
    {
        return data_[static_cast<Eigen::Index>(i + dims_[0] * (j + dims_[1] * k))];
    }
    [[nodiscard]] const cdouble &operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return data_[static_cast<Eigen::Index>(i + dims_[0] * (j + dims_[1] * k))];
    }

    [[nodiscard]] const CVector &data() const noexcept { return data_; }
    [[nodiscard]] CVector &data() noexcept { return data_; }

    // Bounds-checked element access.
    [[nodiscard]] cdouble at(std::size_t i, std::size_t j, std::size_t k) const;

    [[nodiscard]] double squared_norm() const { return data_.squaredNorm(); }

    Tensor3 &operator+=(const Tensor3 &other);
    Tensor3 &operator-=(const Tensor3 &other);
    Tensor3 &operator*=(cdouble s);

    friend Tensor3 operator+(Tensor3 a, const Tensor3 &b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3 &b) { return a -= b; }

private:
    Dims dims_{0, 0, 0};
    CVector data_;
};

// Element (i,j,k) = a_i * b_j * c_k.
[[nodiscard]] Tensor3 outer3(const CVector &a, const CVector &b, const CVector &c);

// Sum of rank-1 terms sum_u a_u o b_u o c_u over the columns of the factors.
[[nodiscard]] Tensor3 kruskal(const CMatrix &A, const CMatrix &B, const CMatrix &C);

// Mode must be 1, 2 or 3; std::invalid_argument otherwise.
[[nodiscard]] CMatrix unfold(const Tensor3 &t, int mode);
[[nodiscard]] Tensor3 fold(const CMatrix &m, int mode, const Tensor3::Dims &dims);

[[nodiscard]] CVector vectorize(const Tensor3 &t);
[[nodiscard]] Tensor3 fold_vector(const CVector &v, const Tensor3::Dims &dims);

[[nodiscard]] CMatrix kron(const CMatrix &A, const CMatrix &B);
[[nodiscard]] CVector kron(const CVector &a, const CVector &b);

// Column u equals kron(A.col(u), B.col(u)).
[[nodiscard]] CMatrix khatri_rao(const CMatrix &A, const CMatrix &B);

// Inverse of column stacking: result(p, q) = v[p + P*q].
[[nodiscard]] CMatrix mat_fold(const CVector &v, std::size_t P, std::size_t Q);

// Relative Frobenius error ||a - b|| / ||b|| (absolute when b is zero).
[[nodiscard]] double relative_error(const CMatrix &a, const CMatrix &b);
[[nodiscard]] double relative_error(const Tensor3 &a, const Tensor3 &b);

} // namespace dsmdt
