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

#ifndef RMCART_OBJECTIVES_HPP
#define RMCART_OBJECTIVES_HPP

#include "rmcart/decoder.hpp"
#include "rmcart/synth.hpp"

namespace rmcart {

struct RegWeights
{
    double lambda1 = 1e-3;   ///< on ||Z||_F^2
    double lambda2 = 1e-3;   ///< on ||C||_F^2
    double lambda3 = 1e-4;   ///< on the squared conv weights of every layer

    static RegWeights none() { return {0.0, 0.0, 0.0}; }
    void validate() const;
};

struct LossResult
{
    double value = 0.0;
    Gradients grad;
};

/// Value and gradient of a data term with respect to the modeled entries.
struct DataTerm
{
    double value = 0.0;
    Eigen::MatrixXd grad;
};

/// sum (Y - log(X + a))^2 over the observed entries. X and Y are N x K.
DataTerm fp_data_term(const Eigen::Ref<const Eigen::MatrixXd> &x_obs, const Eigen::Ref<const Eigen::MatrixXd> &y_obs,
                      double a_offset);

/// -sum log P(label | v = log(X + a)) for the Gaussian-dithered quantizer.
DataTerm quant_data_term(const Eigen::Ref<const Eigen::MatrixXd> &x_obs, const Eigen::Ref<const RowMatrixXi> &labels,
                         const QuantizerSpec &spec);

/// log Phi(x) and log(1 - Phi(x)) without underflow for |x| up to ~1e150.
double log_normal_cdf(double x);
double log_normal_sf(double x);

/// log P(lower < v + sigma*n <= upper) for standard normal n; floored at log(1e-300).
double log_bin_probability(double lower, double upper, double v, double sigma);

/// Per-entry negative log-likelihood and its derivative with respect to v.
struct BinNll
{
    double value;
    double dv;
};
BinNll bin_nll(double lower, double upper, double v, double sigma);

/// Masked squared error in the h-domain plus penalties. y_obs is N x K, already h-transformed.
LossResult fp_loss(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C,
                   const Eigen::Ref<const Eigen::MatrixXd> &y_obs, const SamplingMask &mask, double a_offset,
                   const RegWeights &reg);

/// Quantized negative log-likelihood plus penalties. labels is N x K with entries in [1, L].
LossResult quant_nll(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C,
                     const Eigen::Ref<const RowMatrixXi> &labels, const SamplingMask &mask, const QuantizerSpec &spec,
                     const RegWeights &reg);

/// Penalty value; gradients 2*lambda*x are added into `grad` when non-null.
double regularizer(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C, const RegWeights &reg,
                   Gradients *grad);

} // namespace rmcart

#endif // RMCART_OBJECTIVES_HPP
