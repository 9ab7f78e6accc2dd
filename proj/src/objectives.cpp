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

#include "rmcart/objectives.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace rmcart {

void RegWeights::validate() const
{
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0))
        throw std::invalid_argument("RegWeights: weights must be >= 0");
}

// Gaussian tails ----------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogFloor = std::log(1e-300);

double log_normal_pdf(double x)
{
    if (std::isinf(x))
        return -kInf;
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// log(1 - exp(d)) for d <= 0.
double log1mexp(double d)
{
    if (d == -kInf)
        return 0.0;
    return d > -std::numbers::ln2 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d));
}

} // namespace

double log_normal_sf(double x)
{
    if (x == -kInf)
        return 0.0;
    if (x == kInf)
        return -kInf;
    if (x < 25.0)
        return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
    // Mills-ratio asymptotic series; at x >= 25 eight terms are below 1e-16 relative.
    const double inv2 = 1.0 / (x * x);
    double term = 1.0, series = 1.0;
    for (int k = 1; k <= 8; ++k)
    {
        term *= -(2.0 * k - 1.0) * inv2;
        series += term;
    }
    return log_normal_pdf(x) - std::log(x) + std::log(series);
}

double log_normal_cdf(double x) { return log_normal_sf(-x); }

namespace {

/// log P without the floor.
double raw_log_bin_probability(double lo, double hi)
{
    if (lo >= 0.0)
    {
        const double a = log_normal_sf(lo);
        return a + log1mexp(log_normal_sf(hi) - a);
    }
    if (hi <= 0.0)
    {
        const double a = log_normal_cdf(hi);
        return a + log1mexp(log_normal_cdf(lo) - a);
    }
    const double outside = 0.5 * std::erfc(-lo / std::numbers::sqrt2) + 0.5 * std::erfc(hi / std::numbers::sqrt2);
    return std::log1p(-outside);
}

} // namespace

double log_bin_probability(double lower, double upper, double v, double sigma)
{
    const double lo = (lower - v) / sigma;
    const double hi = (upper - v) / sigma;
    return std::min(0.0, std::max(kLogFloor, raw_log_bin_probability(lo, hi)));
}

BinNll bin_nll(double lower, double upper, double v, double sigma)
{
    const double lo = (lower - v) / sigma;
    const double hi = (upper - v) / sigma;
    const double raw = std::min(0.0, raw_log_bin_probability(lo, hi));
    // Past the floor the value saturates; the slope of the unfloored likelihood is
    // kept so far-off entries still pull the model toward their bin.
    const double logp = std::max(kLogFloor, raw);
    const double dv = (std::exp(log_normal_pdf(hi) - raw) - std::exp(log_normal_pdf(lo) - raw)) / sigma;
    return {-logp, dv};
}

// Data terms --------------------------------------------------------------

DataTerm fp_data_term(const Eigen::Ref<const Eigen::MatrixXd> &x_obs, const Eigen::Ref<const Eigen::MatrixXd> &y_obs,
                      double a_offset)
{
    if (x_obs.rows() != y_obs.rows() || x_obs.cols() != y_obs.cols())
        throw std::invalid_argument("fp_data_term: model and measurement shapes differ");
    const Eigen::ArrayXXd shifted = x_obs.array() + a_offset;
    const Eigen::ArrayXXd resid = y_obs.array() - shifted.log();
    return {resid.square().sum(), (-2.0 * resid / shifted).matrix()};
}

DataTerm quant_data_term(const Eigen::Ref<const Eigen::MatrixXd> &x_obs, const Eigen::Ref<const RowMatrixXi> &labels,
                         const QuantizerSpec &spec)
{
    if (x_obs.rows() != labels.rows() || x_obs.cols() != labels.cols())
        throw std::invalid_argument("quant_data_term: model and label shapes differ");
    const int L = spec.levels();
    DataTerm out;
    out.grad.resize(x_obs.rows(), x_obs.cols());
    for (Eigen::Index s = 0; s < x_obs.rows(); ++s)
        for (Eigen::Index k = 0; k < x_obs.cols(); ++k)
        {
            const int q = labels(s, k);
            if (q < 1 || q > L)
                throw std::invalid_argument("quant_data_term: label outside [1, L]");
            const double shifted = x_obs(s, k) + spec.a_offset;
            const BinNll e = bin_nll(spec.bins[q - 1], spec.bins[q], std::log(shifted), spec.sigma);
            out.value += e.value;
            out.grad(s, k) = e.dv / shifted;
        }
    return out;
}

// Composed losses ---------------------------------------------------------

double regularizer(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C, const RegWeights &reg,
                   Gradients *grad)
{
    reg.validate();
    const Eigen::VectorXd mask = theta.conv_weight_mask();
    const Eigen::VectorXd conv = theta.values().cwiseProduct(mask);
    if (grad)
    {
        grad->Z += 2.0 * reg.lambda1 * Z;
        grad->C += 2.0 * reg.lambda2 * C;
        grad->theta += 2.0 * reg.lambda3 * conv;
    }
    return reg.lambda1 * Z.squaredNorm() + reg.lambda2 * C.squaredNorm() + reg.lambda3 * conv.squaredNorm();
}

namespace {

template <typename DataFn>
LossResult masked_loss(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C, const SamplingMask &mask,
                       const RegWeights &reg, DataFn &&data)
{
    const int side = theta.arch().output_side();
    if (mask.I() != side || mask.J() != side)
        throw std::invalid_argument("loss: mask grid does not match the decoder output");
    if (Z.cols() != C.cols())
        throw std::invalid_argument("loss: Z and C must have one column per emitter");

    std::vector<DecoderTrace> traces;
    const Eigen::MatrixXd S = forward_slfs(theta, Z, &traces);
    const auto rows = mask.rows();
    const Eigen::MatrixXd x_obs = S(rows, Eigen::all) * C.transpose();
    const DataTerm term = data(x_obs);

    RowMatrixXd cotangent = RowMatrixXd::Zero(S.rows(), C.rows());
    cotangent(rows, Eigen::all) = term.grad;
    LossResult out;
    out.grad = backward_from_traces(theta, S, traces, C, cotangent);
    out.value = term.value + regularizer(theta, Z, C, reg, &out.grad);
    return out;
}

} // namespace

LossResult fp_loss(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C,
                   const Eigen::Ref<const Eigen::MatrixXd> &y_obs, const SamplingMask &mask, double a_offset,
                   const RegWeights &reg)
{
    if (y_obs.rows() != static_cast<Eigen::Index>(mask.count()) || y_obs.cols() != C.rows())
        throw std::invalid_argument("fp_loss: measurements do not match the mask");
    if (!(a_offset > 0.0))
        throw std::invalid_argument("fp_loss: a_offset must be positive");
    return masked_loss(theta, Z, C, mask, reg,
                       [&](const Eigen::MatrixXd &x_obs) { return fp_data_term(x_obs, y_obs, a_offset); });
}

LossResult quant_nll(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C,
                     const Eigen::Ref<const RowMatrixXi> &labels, const SamplingMask &mask, const QuantizerSpec &spec,
                     const RegWeights &reg)
{
    spec.validate();
    if (labels.rows() != static_cast<Eigen::Index>(mask.count()) || labels.cols() != C.rows())
        throw std::invalid_argument("quant_nll: labels do not match the mask");
    return masked_loss(theta, Z, C, mask, reg,
                       [&](const Eigen::MatrixXd &x_obs) { return quant_data_term(x_obs, labels, spec); });
}

} // namespace rmcart
