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

#ifndef RMCART_SYNTH_HPP
#define RMCART_SYNTH_HPP

#include "rmcart/core.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

namespace rmcart {

struct ShadowingParams
{
    double Xc = 90.0;                ///< decorrelation distance [m]
    double eta = 6.0;                ///< shadowing standard deviation [dB]
    double path_loss_exponent = 2.0;
    GridCell emitter{0, 0};
};

/// Exact sampler for a zero-mean Gaussian field on an I x J grid (1 m cells) with
/// covariance exp(-|p - q| / Xc). The Cholesky factor of the full IJ x IJ
/// correlation matrix is computed once and shared by every draw.
class ShadowingSampler
{
  public:
    ShadowingSampler(int I, int J, double Xc);

    /// Process-wide cache keyed by (I, J, Xc). Thread-safe.
    static std::shared_ptr<const ShadowingSampler> shared(int I, int J, double Xc);

    /// One field in dB with standard deviation eta.
    [[nodiscard]] RowMatrixXd sample(double eta, Seed seed) const;

    [[nodiscard]] int I() const { return I_; }
    [[nodiscard]] int J() const { return J_; }

  private:
    int I_, J_;
    Eigen::MatrixXd lower_;
};

RowMatrixXd shadowing_field(int I, int J, const ShadowingParams &params, Seed seed);

/// S(i,j) = min(1, max(d,1)^-n * 10^(shadow/10)), d the distance to the emitter in meters.
SlfMatrix generate_slf(int I, int J, const ShadowingParams &params, Seed seed);

struct GaussianBump
{
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;
};

struct PsdSpec
{
    std::vector<GaussianBump> components;
};

Eigen::VectorXd generate_psd(int K, const PsdSpec &spec);

struct PsdRanges
{
    int bumps_min = 2, bumps_max = 4;
    double amp_min = 0.5, amp_max = 2.0;
    double width_min = 2.0, width_max = 6.0;
};

PsdSpec random_psd_spec(int K, const PsdRanges &ranges, Seed seed);

/// X(i,j,k) = sum_r S_r(i,j) C(k,r).
RadioMapTensor assemble_map(std::span<const SlfMatrix> slfs, const PsdMatrix &C);
/// Same, with the SLFs already stacked as an IJ x R matrix (column r = row-major S_r).
RadioMapTensor assemble_map(Dims3 dims, const Eigen::Ref<const Eigen::MatrixXd> &slf_columns, const PsdMatrix &C);

inline double h_transform(double x, double a_offset) { return std::log(x + a_offset); }
inline double h_inverse(double y, double a_offset) { return std::max(0.0, std::exp(y) - a_offset); }

template <typename Derived>
auto h_transform(const Eigen::ArrayBase<Derived> &x, double a_offset)
{
    return (x + a_offset).log();
}

template <typename Derived>
auto h_inverse(const Eigen::ArrayBase<Derived> &y, double a_offset)
{
    return (y.exp() - a_offset).max(0.0);
}

/// Quantizer in the h-domain: label l is returned for b_{l-1} < x <= b_l, l in [1, L].
struct QuantizerSpec
{
    std::vector<double> bins;   ///< b_0 = -inf < b_1 < ... < b_L = +inf
    double sigma = 0.1;
    double a_offset = 1e-3;
    int B = 3;

    [[nodiscard]] int levels() const { return 1 << B; }
    void validate() const;
    [[nodiscard]] int label(double x) const;
};

/// Uniform bins over [mean - 3 std, mean + 3 std] of the given h-domain values,
/// with the two outer bins extended to infinity.
QuantizerSpec design_quantizer(const Eigen::Ref<const Eigen::MatrixXd> &h_values, int B, double sigma,
                               double a_offset);

/// Labels in [1, L] for each observed entry: Q(h(x) + noise), noise ~ N(0, sigma^2).
RowMatrixXi quantize_fibers(const Measurements &measurements, const QuantizerSpec &spec, Seed seed);

// Whole scenarios -----------------------------------------------------------

struct ScenarioParams
{
    int I = 64, J = 64, K = 64, R = 2;
    double Xc = 90.0;
    double eta = 6.0;
    double path_loss_exponent = 2.0;
    PsdRanges psd;
};

struct Scenario
{
    RadioMapTensor X;
    std::vector<SlfMatrix> slfs;
    PsdMatrix C;
    std::vector<GridCell> emitters;
};

/// Emitters at distinct uniformly drawn cells, independent shadowing per emitter.
Scenario generate_scenario(const ScenarioParams &params, Seed seed);

} // namespace rmcart

#endif // RMCART_SYNTH_HPP
