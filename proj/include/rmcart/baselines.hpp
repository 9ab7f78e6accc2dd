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

#ifndef RMCART_BASELINES_HPP
#define RMCART_BASELINES_HPP

#include "rmcart/solver.hpp"

namespace rmcart {

/// Inverse-distance weighting per band in the h-domain; observed cells are reproduced exactly.
RadioMapTensor idw_interpolate(const Measurements &measurements, Dims3 dims, double power_p = 2.0,
                               double a_offset = 1e-3);

struct BtdConfig
{
    int rank_L = 4;
    int iters = 200;
    double tol = 1e-9;        ///< relative change of the damped objective
    double damping = 1e-8;    ///< Tikhonov weight on every block
    Seed seed{0};

    void validate() const;
};

struct BtdResult
{
    RadioMapTensor estimate;                 ///< clamped at zero
    std::vector<Eigen::MatrixXd> A, B;       ///< per emitter, I x L and J x L
    PsdMatrix C;
    std::vector<double> objective;           ///< damped objective after each full cycle of block updates
    std::vector<double> block_objective;     ///< after every individual block update
};

/// Fits sum_r (A_r B_r^T) o c_r to the observed fibers by cyclic exact least squares.
BtdResult btd_fit(const Measurements &measurements, Dims3 dims, int R, const BtdConfig &config);
RadioMapTensor btd_recover(const Measurements &measurements, Dims3 dims, int R, const BtdConfig &config);

class InfeasibleBudget : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Unfactored decoder emitting all K bands, sized to 1080 + 16R (+-5%) scalars.
struct NaiveSizing
{
    DecoderArch arch;
    long param_count = 0;   ///< decoder weights plus latent code
    long budget = 0;        ///< 1080 + 16R
};

NaiveSizing naive_sizing(int K, int R, int side = 64);

struct NaiveResult
{
    RadioMapTensor estimate;
    Eigen::MatrixXd raw_output;   ///< IJ x K Sigmoid output before scaling
    double scale = 1.0;
    NaiveSizing sizing;
    std::vector<double> trace;
};

NaiveResult naive_unn_recover(const Observations &obs, const SamplingMask &mask, Dims3 dims, int R,
                              const SolverConfig &config, Seed seed);

} // namespace rmcart

#endif // RMCART_BASELINES_HPP
