// SPDX-License-Identifier: Apache-2.0
//
// rmcart - radio map cartography with untrained deep decoders
// Copyright (C) 2026 The rmcart Authors
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

// Decoder building blocks and their adjoints.
//
// A feature map with side D and C channels is a (D*D) x C matrix; column c is
// channel c flattened row-major (pixel p = y*D + x). All adjoints are exact
// vector-Jacobian products of the matching forward function.

#ifndef RMCART_LAYERS_HPP
#define RMCART_LAYERS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rmcart::layers {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Bilinear x2 upsampling --------------------------------------------------

/// 1-D interpolation operator (2n x n), half-pixel centers, edge clamping.
template <typename Scalar>
Matrix<Scalar> upsample_operator(int n)
{
    Matrix<Scalar> U = Matrix<Scalar>::Zero(2 * n, n);
    for (int o = 0; o < 2 * n; ++o)
    {
        const double src = std::max(0.0, (o + 0.5) / 2.0 - 0.5);
        const int lo = static_cast<int>(std::floor(src));
        const int hi = std::min(lo + 1, n - 1);
        const double frac = src - lo;
        U(o, lo) += Scalar(1.0 - frac);
        U(o, hi) += Scalar(frac);
    }
    return U;
}

template <typename Scalar>
Matrix<Scalar> upsample2x(const Matrix<Scalar> &in, int side)
{
    const Matrix<Scalar> U = upsample_operator<Scalar>(side);
    Matrix<Scalar> out(4 * side * side, in.cols());
    for (Eigen::Index c = 0; c < in.cols(); ++c)
    {
        Eigen::Map<const RowMajorMatrix<Scalar>> plane(in.col(c).data(), side, side);
        Eigen::Map<RowMajorMatrix<Scalar>>(out.col(c).data(), 2 * side, 2 * side) = U * plane * U.transpose();
    }
    return out;
}

template <typename Scalar>
Matrix<Scalar> upsample2x_adjoint(const Matrix<Scalar> &grad_out, int side)
{
    const Matrix<Scalar> U = upsample_operator<Scalar>(side);
    Matrix<Scalar> grad_in(side * side, grad_out.cols());
    for (Eigen::Index c = 0; c < grad_out.cols(); ++c)
    {
        Eigen::Map<const RowMajorMatrix<Scalar>> plane(grad_out.col(c).data(), 2 * side, 2 * side);
        Eigen::Map<RowMajorMatrix<Scalar>>(grad_in.col(c).data(), side, side) = U.transpose() * plane * U;
    }
    return grad_in;
}

// Same-padded n x n convolution via im2col --------------------------------
//
// Patch column index is (c*n + ky)*n + kx, so a kernel stored [out][in][ky][kx]
// is exactly the column-major (C_in*n*n) x C_out weight matrix.

template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar> &in, int side, int n)
{
    if (n % 2 == 0)
        throw std::invalid_argument("im2col: kernel size must be odd");
    const int pad = (n - 1) / 2;
    const auto channels = in.cols();
    Matrix<Scalar> patches = Matrix<Scalar>::Zero(side * side, channels * n * n);
    for (Eigen::Index c = 0; c < channels; ++c)
        for (int ky = 0; ky < n; ++ky)
            for (int kx = 0; kx < n; ++kx)
            {
                const Eigen::Index col = (c * n + ky) * n + kx;
                for (int y = 0; y < side; ++y)
                {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= side)
                        continue;
                    for (int x = 0; x < side; ++x)
                    {
                        const int sx = x + kx - pad;
                        if (sx >= 0 && sx < side)
                            patches(y * side + x, col) = in(sy * side + sx, c);
                    }
                }
            }
    return patches;
}

template <typename Scalar>
Matrix<Scalar> col2im(const Matrix<Scalar> &grad_patches, int side, int channels, int n)
{
    const int pad = (n - 1) / 2;
    Matrix<Scalar> grad_in = Matrix<Scalar>::Zero(side * side, channels);
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < n; ++ky)
            for (int kx = 0; kx < n; ++kx)
            {
                const Eigen::Index col = (static_cast<Eigen::Index>(c) * n + ky) * n + kx;
                for (int y = 0; y < side; ++y)
                {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= side)
                        continue;
                    for (int x = 0; x < side; ++x)
                    {
                        const int sx = x + kx - pad;
                        if (sx >= 0 && sx < side)
                            grad_in(sy * side + sx, c) += grad_patches(y * side + x, col);
                    }
                }
            }
    return grad_in;
}

// Channel normalization ---------------------------------------------------

template <typename Scalar>
struct ChannelNormCache
{
    Vector<Scalar> mean;
    Vector<Scalar> stddev;     ///< population std over spatial positions
    Matrix<Scalar> normalized; ///< (x - mean) / (std + eps), before the affine map
};

/// y = (x - mean_c) / (std_c + eps) * scale_c + shift_c, statistics per channel.
template <typename Scalar>
Matrix<Scalar> channel_norm(const Matrix<Scalar> &x, const Eigen::Ref<const Vector<Scalar>> &scale,
                            const Eigen::Ref<const Vector<Scalar>> &shift, Scalar eps, ChannelNormCache<Scalar> *cache)
{
    const auto n = static_cast<Scalar>(x.rows());
    ChannelNormCache<Scalar> local;
    ChannelNormCache<Scalar> &cc = cache ? *cache : local;
    cc.mean = x.colwise().sum().transpose() / n;
    cc.normalized = x.rowwise() - cc.mean.transpose();
    cc.stddev = (cc.normalized.colwise().squaredNorm().transpose() / n).array().sqrt();
    cc.normalized.array().rowwise() /= (cc.stddev.array() + eps).transpose();
    Matrix<Scalar> y = cc.normalized.array().rowwise() * scale.transpose().array();
    y.array().rowwise() += shift.transpose().array();
    return y;
}

/// Adjoint of channel_norm. Writes dscale/dshift (accumulating) and returns dx.
template <typename Scalar>
Matrix<Scalar> channel_norm_adjoint(const Matrix<Scalar> &grad_y, const ChannelNormCache<Scalar> &cache,
                                    const Eigen::Ref<const Vector<Scalar>> &scale, Scalar eps,
                                    Eigen::Ref<Vector<Scalar>> grad_scale, Eigen::Ref<Vector<Scalar>> grad_shift)
{
    const auto rows = grad_y.rows();
    const auto n = static_cast<Scalar>(rows);
    grad_scale += (grad_y.array() * cache.normalized.array()).colwise().sum().transpose().matrix();
    grad_shift += grad_y.colwise().sum().transpose();

    Matrix<Scalar> grad_x(rows, grad_y.cols());
    for (Eigen::Index c = 0; c < grad_y.cols(); ++c)
    {
        const Scalar g = Scalar(1) / (cache.stddev(c) + eps);
        const Vector<Scalar> dxhat = grad_y.col(c) * scale(c);
        // centered input = normalized / g
        const Vector<Scalar> centered = cache.normalized.col(c) / g;
        grad_x.col(c) = g * (dxhat.array() - dxhat.mean()).matrix();
        if (cache.stddev(c) > Scalar(0))
        {
            const Scalar proj = dxhat.dot(centered);
            grad_x.col(c) -= (g * g * proj / (n * cache.stddev(c))) * centered;
        }
    }
    return grad_x;
}

// Pointwise ---------------------------------------------------------------

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived> &x)
{
    return x.cwiseMax(typename Derived::Scalar(0));
}

/// Subgradient at 0 is taken as 0.
template <typename Scalar>
Matrix<Scalar> relu_adjoint(const Matrix<Scalar> &grad_y, const Matrix<Scalar> &pre_activation)
{
    return (pre_activation.array() > Scalar(0)).select(grad_y, Scalar(0));
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived> &x)
{
    using Scalar = typename Derived::Scalar;
    return x.unaryExpr([](Scalar v) {
        if (v >= Scalar(0))
            return Scalar(1) / (Scalar(1) + std::exp(-v));
        const Scalar e = std::exp(v);
        return e / (Scalar(1) + e);
    });
}

template <typename Scalar>
Matrix<Scalar> sigmoid_adjoint(const Matrix<Scalar> &grad_y, const Matrix<Scalar> &y)
{
    return (grad_y.array() * y.array() * (Scalar(1) - y.array())).matrix();
}

} // namespace rmcart::layers

#endif // RMCART_LAYERS_HPP
