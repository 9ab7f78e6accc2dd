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

#ifndef RMCART_ANALYSIS_HPP
#define RMCART_ANALYSIS_HPP

#include "rmcart/decoder.hpp"
#include "rmcart/synth.hpp"

#include <array>

namespace rmcart {

// Metrics -------------------------------------------------------------------

struct SsimOptions
{
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over all fully contained Gaussian windows.
double ssim_band(const Eigen::Ref<const RowMatrixXd> &A, const Eigen::Ref<const RowMatrixXd> &B,
                 const SsimOptions &options);

/// Band average of ssim_band on log(X + a), with the dynamic range of the ground truth's log map.
double ssim_log_avg(const RadioMapTensor &X, const RadioMapTensor &Xhat, double a_offset = 1e-3);

/// ||X - Xhat||_F^2 / ||X||_F^2.
double nmse(const RadioMapTensor &X, const RadioMapTensor &Xhat);

// Complexity bounds -----------------------------------------------------------

/// Symbols of the covering-number bounds. Logarithms are natural.
struct BoundParams
{
    int R = 1;
    int K = 1;
    int D0 = 1;          ///< latent dimension
    int L = 1;           ///< number of weight layers
    int W = 2;           ///< widest layer
    double s = 1.0;      ///< spectral-norm cap per layer
    double b = 1.0;      ///< (2,1)-norm cap per layer
    double a = 1.0;      ///< latent-norm cap
    double kappa = 1.0;  ///< PSD-norm cap
    double gamma = 1.0;  ///< SLF Frobenius cap
    double P = 1.0;      ///< product of squared activation Lipschitz constants
    double epsilon = 1.0;
    long N = 1;          ///< number of sensors
    double delta = 0.05; ///< failure probability; carried, unused by the evaluators
    double nu = 0.0;     ///< model misspecification
    int I = 64, J = 64;

    /// Throws std::invalid_argument for epsilon <= 0, non-finite values, counts < 1, D0 < 0, nu < 0.
    void validate() const;
};

/// Fills D0, L, W and P (unit Lipschitz constants) from a decoder shape.
BoundParams bound_params_for(const DecoderArch &arch, int R, int K);

/// log N(H, eps): 4 a^2 b^2 P ln(2W^2) s^(2L-2) L^3 / eps^2 + D0^2 ln(6 P a / eps).
double cover_bound_H(const BoundParams &p);

/// log N(X_unn, eps): R^3 (kappa+gamma) a^2 b^2 P ln(2W^2) s^(2L-2) L^3 / eps^2
///                   + R D0^2 ln(6 R P a (kappa+gamma) / eps) + R K ln(3 R kappa (kappa+gamma) / eps).
/// Throws std::domain_error when a logarithm's argument is not positive.
double cover_bound_Xunn(const BoundParams &p);

/// Arguments of the three logarithms in cover_bound_Xunn.
std::array<double, 3> cover_log_arguments(const BoundParams &p);
/// True when every logarithm in cover_bound_Xunn is positive.
bool log_arguments_exceed_one(const BoundParams &p);

/// Error-bound terms with unit constants. A diagnostic, not a certified bound.
struct PropTerms
{
    double term1;
    double term2;
    double nu;
};

PropTerms prop_bound_terms(const BoundParams &p, bool quantized);

} // namespace rmcart

#endif // RMCART_ANALYSIS_HPP
