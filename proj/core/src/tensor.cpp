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

#include "dsmdt/tensor.hpp"

#include <stdexcept>
#include <string>

namespace dsmdt {

namespace {

void check_mode(int mode)
{
    if (mode < 1 || mode > 3)
        throw std::invalid_argument("unfold: mode must be 1, 2 or 3, got " + std::to_string(mode));
}

Eigen::Index to_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

} // namespace

Tensor3::Tensor3(std::size_t d1, std::size_t d2, std::size_t d3)
    : dims_{d1, d2, d3}, data_(CVector::Zero(to_index(d1 * d2 * d3)))
{
    if (d1 == 0 || d2 == 0 || d3 == 0)
        throw std::invalid_argument("Tensor3: dimensions must be positive");
}

Tensor3::Tensor3(Dims dims, CVector data) : dims_(dims), data_(std::move(data))
{
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
        throw std::invalid_argument("Tensor3: dimensions must be positive");
    if (static_cast<std::size_t>(data_.size()) != dims[0] * dims[1] * dims[2])
        throw std::invalid_argument("Tensor3: data length does not match d1*d2*d3");
}

std::size_t Tensor3::dim(int mode) const
{
    check_mode(mode);
    return dims_[static_cast<std::size_t>(mode - 1)];
}

cdouble Tensor3::at(std::size_t i, std::size_t j, std::size_t k) const
{
    if (i >= dims_[0] || j >= dims_[1] || k >= dims_[2])
        throw std::out_of_range("Tensor3::at: index out of range");
    return (*this)(i, j, k);
}

Tensor3 &Tensor3::operator+=(const Tensor3 &other)
{
    if (dims_ != other.dims_)
        throw std::invalid_argument("Tensor3: dimension mismatch in +=");
    data_ += other.data_;
    return *this;
}

Tensor3 &Tensor3::operator-=(const Tensor3 &other)
{
    if (dims_ != other.dims_)
        throw std::invalid_argument("Tensor3: dimension mismatch in -=");
    data_ -= other.data_;
    return *this;
}

Tensor3 &Tensor3::operator*=(cdouble s)
{
    data_ *= s;
    return *this;
}

Tensor3 outer3(const CVector &a, const CVector &b, const CVector &c)
{
    Tensor3 t(static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()),
              static_cast<std::size_t>(c.size()));
    const Eigen::Index d1 = a.size(), d2 = b.size();
    for (Eigen::Index k = 0; k < c.size(); ++k)
        for (Eigen::Index j = 0; j < d2; ++j)
            t.data().segment((j + d2 * k) * d1, d1) = a * (b[j] * c[k]);
    return t;
}

Tensor3 kruskal(const CMatrix &A, const CMatrix &B, const CMatrix &C)
{
    if (A.cols() != B.cols() || A.cols() != C.cols())
        throw std::invalid_argument("kruskal: factor matrices must have equal column counts");
    if (A.rows() == 0 || B.rows() == 0 || C.rows() == 0)
        throw std::invalid_argument("kruskal: factor matrices must have rows");
    // T_(1) = A (C kr B)^T is the raw memory layout.
    const CMatrix unfolded = A * khatri_rao(C, B).transpose();
    return Tensor3({static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(B.rows()),
                    static_cast<std::size_t>(C.rows())},
                   Eigen::Map<const CVector>(unfolded.data(), unfolded.size()));
}

CMatrix unfold(const Tensor3 &t, int mode)
{
    check_mode(mode);
    const auto [d1, d2, d3] = t.dims();
    switch (mode) {
    case 1:
        return Eigen::Map<const CMatrix>(t.data().data(), to_index(d1), to_index(d2 * d3));
    case 2: {
        CMatrix m(to_index(d2), to_index(d1 * d3));
        for (std::size_t k = 0; k < d3; ++k)
            for (std::size_t j = 0; j < d2; ++j)
                for (std::size_t i = 0; i < d1; ++i)
                    m(to_index(j), to_index(i + d1 * k)) = t(i, j, k);
        return m;
    }
    default: {
        CMatrix m(to_index(d3), to_index(d1 * d2));
        for (std::size_t k = 0; k < d3; ++k)
            m.row(to_index(k)) = t.data().segment(to_index(k * d1 * d2), to_index(d1 * d2)).transpose();
        return m;
    }
    }
}

Tensor3 fold(const CMatrix &m, int mode, const Tensor3::Dims &dims)
{
    check_mode(mode);
    const auto [d1, d2, d3] = dims;
    const std::size_t rows = dims[static_cast<std::size_t>(mode - 1)];
    if (static_cast<std::size_t>(m.rows()) != rows ||
        static_cast<std::size_t>(m.size()) != d1 * d2 * d3)
        throw std::invalid_argument("fold: matrix shape does not match tensor dimensions");
    Tensor3 t(d1, d2, d3);
    switch (mode) {
    case 1:
        t.data() = Eigen::Map<const CVector>(m.data(), m.size());
        break;
    case 2:
        for (std::size_t k = 0; k < d3; ++k)
            for (std::size_t j = 0; j < d2; ++j)
                for (std::size_t i = 0; i < d1; ++i)
                    t(i, j, k) = m(to_index(j), to_index(i + d1 * k));
        break;
    default:
        for (std::size_t k = 0; k < d3; ++k)
            t.data().segment(to_index(k * d1 * d2), to_index(d1 * d2)) = m.row(to_index(k)).transpose();
        break;
    }
    return t;
}

CVector vectorize(const Tensor3 &t) { return t.data(); }

Tensor3 fold_vector(const CVector &v, const Tensor3::Dims &dims) { return Tensor3(dims, v); }

CMatrix kron(const CMatrix &A, const CMatrix &B)
{
    CMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

CVector kron(const CVector &a, const CVector &b)
{
    CVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
}

CMatrix khatri_rao(const CMatrix &A, const CMatrix &B)
{
    if (A.cols() != B.cols())
        throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(A.cols()) +
                                    " vs " + std::to_string(B.cols()) + ")");
    CMatrix out(A.rows() * B.rows(), A.cols());
    for (Eigen::Index u = 0; u < A.cols(); ++u)
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            out.col(u).segment(i * B.rows(), B.rows()) = A(i, u) * B.col(u);
    return out;
}

CMatrix mat_fold(const CVector &v, std::size_t P, std::size_t Q)
{
    if (P == 0 || Q == 0 || static_cast<std::size_t>(v.size()) != P * Q)
        throw std::invalid_argument("mat_fold: vector length must equal P*Q");
    return Eigen::Map<const CMatrix>(v.data(), to_index(P), to_index(Q));
}

double relative_error(const CMatrix &a, const CMatrix &b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("relative_error: shape mismatch");
    const double ref = b.norm();
    const double diff = (a - b).norm();
    return ref > 0.0 ? diff / ref : diff;
}

double relative_error(const Tensor3 &a, const Tensor3 &b)
{
    if (a.dims() != b.dims())
        throw std::invalid_argument("relative_error: dimension mismatch");
    const double ref = b.data().norm();
    const double diff = (a.data() - b.data()).norm();
    return ref > 0.0 ? diff / ref : diff;
}

} // namespace dsmdt
