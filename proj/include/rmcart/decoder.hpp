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

#ifndef RMCART_DECODER_HPP
#define RMCART_DECODER_HPP

#include "rmcart/core.hpp"
#include "rmcart/layers.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rmcart {

/// Deep decoder shape. `channels` holds k_0 .. k_{L+1}; there are L up-blocks
/// (upsample x2, n x n conv, ReLU, channel norm) followed by a 1 x 1 output conv.
struct DecoderArch
{
    std::vector<int> channels{1, 6, 6, 6, 6, 1};
    int kernel = 3;
    int latent_side = 4;
    double norm_epsilon = 1e-6;

    /// 4 up-blocks, 6 channels, 3x3 kernels, 4x4 latent: a 64 x 64 SLF from 1080 weights.
    static DecoderArch standard() { return {}; }
    /// The standard widths with as many up-blocks as a side x side output needs from a 4 x 4 latent.
    /// Throws std::invalid_argument unless side = 4 * 2^b with b >= 1.
    static DecoderArch for_side(int side);

    [[nodiscard]] int blocks() const { return static_cast<int>(channels.size()) - 2; }
    [[nodiscard]] int output_side() const { return latent_side << blocks(); }
    [[nodiscard]] int output_channels() const { return channels.back(); }
    [[nodiscard]] int latent_size() const { return latent_side * latent_side * channels.front(); }
    [[nodiscard]] int max_width() const;

    /// Throws std::invalid_argument on an inconsistent channel chain.
    void validate() const;

    friend bool operator==(const DecoderArch &, const DecoderArch &) = default;
};

/// Per-block parameter counts followed by the output layer's count.
std::vector<long> layer_param_counts(const DecoderArch &arch);
long count_params(const DecoderArch &arch);

/// Decoder weights as one flat vector.
///
/// Layout, block by block: conv kernel [out][in][ky][kx], norm scale[k_{i+1}],
/// norm shift[k_{i+1}]; then the output kernel [out][in]. Convolutions carry
/// no bias.
class DecoderParams
{
  public:
    DecoderParams() : DecoderParams(DecoderArch::standard()) {}
    explicit DecoderParams(DecoderArch arch);   // zero kernels, unit scale, zero shift
    DecoderParams(DecoderArch arch, Eigen::VectorXd values);

    [[nodiscard]] const DecoderArch &arch() const { return arch_; }
    [[nodiscard]] const Eigen::VectorXd &values() const { return values_; }
    [[nodiscard]] Eigen::VectorXd &values() { return values_; }

    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> kernel(int block) const;
    [[nodiscard]] Eigen::Map<Eigen::MatrixXd> kernel(int block);
    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> scale(int block) const;
    [[nodiscard]] Eigen::Map<Eigen::VectorXd> scale(int block);
    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> shift(int block) const;
    [[nodiscard]] Eigen::Map<Eigen::VectorXd> shift(int block);
    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> output_kernel() const;
    [[nodiscard]] Eigen::Map<Eigen::MatrixXd> output_kernel();

    /// 1 for convolution weights, 0 for normalization affine parameters.
    [[nodiscard]] Eigen::VectorXd conv_weight_mask() const;

  private:
    struct Offsets
    {
        std::vector<Eigen::Index> kernel, scale, shift;
        Eigen::Index output = 0;
    };
    DecoderArch arch_;
    Offsets offsets_;
    Eigen::VectorXd values_;
};

/// One latent code per column, each of length arch.latent_size().
using LatentCodes = Eigen::MatrixXd;

/// Intermediate values kept by a forward pass for the reverse sweep.
struct DecoderTrace
{
    struct Block
    {
        Eigen::MatrixXd patches;
        Eigen::MatrixXd pre_activation;
        layers::ChannelNormCache<double> norm;
    };
    std::vector<Block> blocks;
    Eigen::MatrixXd last_hidden;
    Eigen::MatrixXd output;   ///< (D_L^2) x k_{L+1}, after the Sigmoid
};

/// Raw decoder output, (D_L^2) x k_{L+1}, each column a row-major D_L x D_L image in (0, 1).
Eigen::MatrixXd decode(const DecoderParams &theta, const Eigen::Ref<const Eigen::VectorXd> &z,
                       DecoderTrace *trace = nullptr);

/// Accumulates dL/dtheta into grad_theta and returns dL/dz.
Eigen::VectorXd decode_adjoint(const DecoderParams &theta, const DecoderTrace &trace,
                               const Eigen::MatrixXd &grad_output, Eigen::Ref<Eigen::VectorXd> grad_theta);

/// SLF for one latent code (single output channel required).
SlfMatrix forward(const DecoderParams &theta, const Eigen::Ref<const Eigen::VectorXd> &z);

/// All SLFs at once: (D_L^2) x R, column r = row-major G(z_r).
Eigen::MatrixXd forward_slfs(const DecoderParams &theta, const LatentCodes &Z,
                             std::vector<DecoderTrace> *traces = nullptr);

RadioMapTensor forward_all(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C);

struct Gradients
{
    Eigen::VectorXd theta;
    Eigen::MatrixXd Z;
    Eigen::MatrixXd C;
};

/// Vector-Jacobian product of forward_all. `cotangent` is the IJ x K unfolding of dL/dX.
Gradients backward(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C,
                   const Eigen::Ref<const RowMatrixXd> &cotangent);

/// Same, reusing SLFs and traces from forward_slfs.
Gradients backward_from_traces(const DecoderParams &theta, const Eigen::MatrixXd &slfs,
                               const std::vector<DecoderTrace> &traces, const PsdMatrix &C,
                               const Eigen::Ref<const RowMatrixXd> &cotangent);

// Initialization ------------------------------------------------------------

enum class InitScheme
{
    uniform,          ///< conv weights and codes ~ U[-1, 1]
    xavier,           ///< Glorot-uniform conv weights, codes ~ U[-1, 1]
    warm_start_fit,   ///< Xavier, then a short fit of G(z_r) to caller-supplied SLFs
};

InitScheme parse_init_scheme(const std::string &name);
std::string to_string(InitScheme scheme);

struct SlfFitOptions
{
    int steps = 100;
    double learning_rate = 0.05;
    double floor = 1e-4;   ///< fit is on log(S + floor)
};

/// Fits G(z_r) to targets[r] by Adam on log(G + floor) - log(T + floor). Returns the final loss.
double fit_slfs(DecoderParams &theta, LatentCodes &Z, std::span<const SlfMatrix> targets,
                const SlfFitOptions &options = {});
double slf_fit_loss(const DecoderParams &theta, const LatentCodes &Z, std::span<const SlfMatrix> targets,
                    double floor = 1e-4);

struct DecoderInit
{
    DecoderParams theta;
    LatentCodes Z;
};

DecoderInit init_params(const DecoderArch &arch, InitScheme scheme, int R, Seed seed,
                        std::span<const SlfMatrix> targets = {}, const SlfFitOptions &fit = {});

// Serialization -------------------------------------------------------------

/// "UNN1 <L> <k_0 .. k_{L+1}> <n> <D0>\n" then the flat parameter vector as little-endian float64.
void params_write(const std::filesystem::path &path, const DecoderParams &theta);
DecoderParams params_read(const std::filesystem::path &path);

} // namespace rmcart

#endif // RMCART_DECODER_HPP
