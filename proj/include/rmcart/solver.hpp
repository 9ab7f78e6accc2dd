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

#ifndef RMCART_SOLVER_HPP
#define RMCART_SOLVER_HPP

#include "rmcart/adam.hpp"
#include "rmcart/objectives.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rmcart {

/// Full-precision sensor reports, already in the h-domain (N x K).
struct FpObservations
{
    Eigen::MatrixXd y;
    double a_offset = 1e-3;
};

/// Quantized sensor reports: labels in [1, L] (N x K) and the quantizer that produced them.
struct QuantObservations
{
    RowMatrixXi labels;
    QuantizerSpec spec;
};

using Observations = std::variant<FpObservations, QuantObservations>;

/// Best linear-power guess for each observed entry: h-inverse of the reports or of the bin midpoints.
Eigen::MatrixXd linear_proxy(const Observations &obs);
double transform_offset(const Observations &obs);
std::string loss_kind(const Observations &obs);

enum class WarmStart
{
    btd,
    interpolation,
    uniform,
    xavier,
};

WarmStart parse_warm_start(const std::string &name);
std::string to_string(WarmStart w);

struct SolverConfig
{
    double decoder_step = 0.05;   ///< Adam step for Z and theta
    double psd_step = 1e-3;       ///< Adam step for C
    int max_iter = 300;
    double tol = 1e-5;            ///< on |L_k - L_{k-1}| / max(1, |L_{k-1}|)
    RegWeights reg;
    AdamParams adam;
    WarmStart init = WarmStart::interpolation;
    int fit_steps = 100;          ///< inner Adam budget when fitting the decoder to reference SLFs

    void validate() const;
};

struct FactoredState
{
    DecoderParams theta;
    LatentCodes Z;
    PsdMatrix C;
};

struct RecoveryResult
{
    RadioMapTensor estimate;
    FactoredState state;
    std::vector<double> trace;   ///< loss at iterations 0..n
    bool converged = false;
    std::string loss_kind;
};

/// Thrown when the loss becomes non-finite; carries the last finite iterate.
class DivergedError : public std::runtime_error
{
  public:
    DivergedError(const std::string &what, FactoredState last, std::vector<double> trace)
        : std::runtime_error(what), last_(std::move(last)), trace_(std::move(trace))
    {
    }
    [[nodiscard]] const FactoredState &last_finite() const { return last_; }
    [[nodiscard]] const std::vector<double> &trace() const { return trace_; }

  private:
    FactoredState last_;
    std::vector<double> trace_;
};

/// Nonnegative rank-R split of X (IJ x K unfolding) into SLF columns and PSD columns, by HALS.
struct NonnegativeFactors
{
    Eigen::MatrixXd slfs;   ///< IJ x R, each column scaled to max 1
    PsdMatrix psds;         ///< K x R
};
NonnegativeFactors nonnegative_split(const RadioMapTensor &X, int R, Seed seed, int sweeps = 200);

/// Decoder and PSD initialization that reproduces X_ref through the factored model.
FactoredState init_from_reference(const RadioMapTensor &X_ref, int R, const DecoderArch &arch, Seed seed,
                                  int fit_steps = 100);

/// Loss value and gradients for the chosen observation model.
LossResult evaluate_loss(const FactoredState &state, const Observations &obs, const SamplingMask &mask,
                         const RegWeights &reg);

/// Alternating Adam updates of C (then projection onto C >= 0), Z and theta.
/// Without `initial`, the warm start named in `config.init` is used.
RecoveryResult recover(const Observations &obs, const SamplingMask &mask, const DecoderArch &arch, int R,
                       const SolverConfig &config, Seed seed, std::optional<FactoredState> initial = std::nullopt);

/// CSV "iter,loss".
void trace_write(const std::filesystem::path &path, const std::vector<double> &trace);

} // namespace rmcart

#endif // RMCART_SOLVER_HPP
