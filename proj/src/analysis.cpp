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

#include "rmcart/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace rmcart {

// SSIM ------------------------------------------------------------------------

namespace {

Eigen::VectorXd gaussian_window(int size, double sigma)
{
    Eigen::VectorXd g(size);
    const double c = 0.5 * (size - 1);
    for (int n = 0; n < size; ++n)
        g(n) = std::exp(-0.5 * (n - c) * (n - c) / (sigma * sigma));
    return g / g.sum();
}

/// 'valid' separable filtering: out = G_rows * M * G_cols^T restricted to full windows.
RowMatrixXd filter_valid(const RowMatrixXd &M, const Eigen::MatrixXd &Fr, const Eigen::MatrixXd &Fc)
{
    return Fr * M * Fc.transpose();
}

Eigen::MatrixXd banded_filter(Eigen::Index n, const Eigen::VectorXd &g)
{
    const Eigen::Index w = g.size();
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n - w + 1, n);
    for (Eigen::Index r = 0; r < F.rows(); ++r)
        F.row(r).segment(r, w) = g.transpose();
    return F;
}

} // namespace

double ssim_band(const Eigen::Ref<const RowMatrixXd> &A, const Eigen::Ref<const RowMatrixXd> &B,
                 const SsimOptions &options)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("ssim_band: image sizes differ");
    if (options.window < 1 || A.rows() < options.window || A.cols() < options.window)
        throw std::invalid_argument("ssim_band: image smaller than the window");
    if (!(options.sigma > 0.0) || !(options.dynamic_range > 0.0))
        throw std::invalid_argument("ssim_band: sigma and dynamic range must be positive");

    const Eigen::VectorXd g = gaussian_window(options.window, options.sigma);
    const Eigen::MatrixXd Fr = banded_filter(A.rows(), g);
    const Eigen::MatrixXd Fc = banded_filter(A.cols(), g);
    const RowMatrixXd a = A, b = B;
    const Eigen::ArrayXXd mu_a = filter_valid(a, Fr, Fc).array();
    const Eigen::ArrayXXd mu_b = filter_valid(b, Fr, Fc).array();
    const Eigen::ArrayXXd var_a = filter_valid(a.cwiseProduct(a), Fr, Fc).array() - mu_a.square();
    const Eigen::ArrayXXd var_b = filter_valid(b.cwiseProduct(b), Fr, Fc).array() - mu_b.square();
    const Eigen::ArrayXXd cov = filter_valid(a.cwiseProduct(b), Fr, Fc).array() - mu_a * mu_b;

    const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
    const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
    const Eigen::ArrayXXd map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                                ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
    return map.mean();
}

double ssim_log_avg(const RadioMapTensor &X, const RadioMapTensor &Xhat, double a_offset)
{
    if (X.dims() != Xhat.dims())
        throw std::invalid_argument("ssim_log_avg: tensor dims differ");
    if (!(a_offset > 0.0))
        throw std::invalid_argument("ssim_log_avg: a_offset must be positive");
    const Eigen::MatrixXd hx = h_transform(X.unfolded().array(), a_offset).matrix();
    const Eigen::MatrixXd hy = h_transform(Xhat.unfolded().array(), a_offset).matrix();
    SsimOptions options;
    options.dynamic_range = hx.maxCoeff() - hx.minCoeff();
    if (!(options.dynamic_range > 0.0))
        options.dynamic_range = 1.0;

    double total = 0.0;
    for (int k = 0; k < X.K(); ++k)
    {
        const Eigen::VectorXd ck = hx.col(k), dk = hy.col(k);
        total += ssim_band(Eigen::Map<const RowMatrixXd>(ck.data(), X.I(), X.J()),
                           Eigen::Map<const RowMatrixXd>(dk.data(), X.I(), X.J()), options);
    }
    return total / X.K();
}

double nmse(const RadioMapTensor &X, const RadioMapTensor &Xhat)
{
    if (X.dims() != Xhat.dims())
        throw std::invalid_argument("nmse: tensor dims differ");
    const double energy = X.unfolded().squaredNorm();
    if (!(energy > 0.0))
        throw std::invalid_argument("nmse: ground truth is identically zero");
    return (X.unfolded() - Xhat.unfolded()).squaredNorm() / energy;
}

// Bounds ----------------------------------------------------------------------

void BoundParams::validate() const
{
    for (double v : {s, b, a, kappa, gamma, P, epsilon, delta, nu})
        if (!std::isfinite(v))
            throw std::invalid_argument("BoundParams: non-finite value");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("BoundParams: epsilon must be positive");
    if (R < 1 || K < 1 || L < 1 || W < 1 || I < 1 || J < 1)
        throw std::invalid_argument("BoundParams: R, K, L, W, I, J must be >= 1");
    if (D0 < 0 || N < 0)
        throw std::invalid_argument("BoundParams: D0 and N must be >= 0");
    if (!(nu >= 0.0))
        throw std::invalid_argument("BoundParams: nu must be >= 0");
}

BoundParams bound_params_for(const DecoderArch &arch, int R, int K)
{
    arch.validate();
    BoundParams p;
    p.R = R;
    p.K = K;
    p.D0 = arch.latent_size();
    p.L = arch.blocks() + 1;
    p.W = *std::max_element(arch.channels.begin(), arch.channels.end());
    p.P = 1.0;
    p.I = p.J = arch.output_side();
    return p;
}

namespace {

double structure_term(const BoundParams &p)
{
    const double L = p.L;
    return p.a * p.a * p.b * p.b * p.P * std::log(2.0 * p.W * p.W) * std::pow(p.s, 2.0 * L - 2.0) * L * L * L /
           (p.epsilon * p.epsilon);
}

double checked_log(double x)
{
    if (!(x > 0.0))
        throw std::domain_error("cover bound: nonpositive logarithm argument " + std::to_string(x));
    return std::log(x);
}

} // namespace

double cover_bound_H(const BoundParams &p)
{
    p.validate();
    const double D0 = p.D0;
    return 4.0 * structure_term(p) + D0 * D0 * checked_log(6.0 * p.P * p.a / p.epsilon);
}

std::array<double, 3> cover_log_arguments(const BoundParams &p)
{
    const double kg = p.kappa + p.gamma;
    return {2.0 * p.W * p.W, 6.0 * p.R * p.P * p.a * kg / p.epsilon, 3.0 * p.R * p.kappa * kg / p.epsilon};
}

bool log_arguments_exceed_one(const BoundParams &p)
{
    for (double x : cover_log_arguments(p))
        if (!(x > 1.0))
            return false;
    return true;
}

double cover_bound_Xunn(const BoundParams &p)
{
    p.validate();
    const auto args = cover_log_arguments(p);
    const double R = p.R, D0 = p.D0, K = p.K;
    return R * R * R * (p.kappa + p.gamma) * structure_term(p) + R * D0 * D0 * checked_log(args[1]) +
           R * K * checked_log(args[2]);
}

PropTerms prop_bound_terms(const BoundParams &p, bool quantized)
{
    p.validate();
    if (p.N == 0)
        throw std::invalid_argument("prop_bound_terms: N must be positive");
    const double cover = cover_bound_Xunn(p);
    if (cover < 0.0)
        throw std::domain_error("prop_bound_terms: negative log covering number");
    const double N = static_cast<double>(p.N), R = p.R, K = p.K;
    if (quantized)
        return {std::sqrt(R) / (K * std::sqrt(N)), std::sqrt(cover / N), p.nu};
    return {R / std::sqrt(N), std::pow(cover, 0.25) / (std::sqrt(K) * std::pow(N, 0.25)), p.nu};
}

} // namespace rmcart
