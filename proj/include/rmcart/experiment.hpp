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

#ifndef RMCART_EXPERIMENT_HPP
#define RMCART_EXPERIMENT_HPP

#include "rmcart/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rmcart {

/// Seeds used by one trial, all derived from the trial seed.
struct TrialSeeds
{
    Seed scenario, mask, quantizer, method;
    static TrialSeeds from(std::uint64_t trial_seed);
};

/// Ground truth plus what the sensors report for one trial.
struct TrialData
{
    Scenario scenario;
    SamplingMask mask;
    Measurements measurements;   ///< linear-power fibers
    Observations obs;            ///< what the recovery sees (h-domain reports or labels)
};

TrialData simulate_trial(const ExperimentConfig &config, std::uint64_t trial_seed);
/// Sensing step for a given ground truth.
TrialData observe(const ExperimentConfig &config, Scenario scenario, SamplingMask mask, std::uint64_t trial_seed);

struct MethodOutput
{
    RadioMapTensor estimate;
    std::vector<double> trace;   ///< empty for idw
    std::string loss_kind;       ///< "fp", "quantized", or "none"
    long param_count = 0;        ///< decoder weights plus latent codes; 0 for idw and btd
};

/// Runs config.method on the observations. DivergedError propagates.
MethodOutput run_method(const ExperimentConfig &config, const SamplingMask &mask, const Observations &obs, Dims3 dims,
                        std::uint64_t trial_seed);

struct MetricsRow
{
    std::string scenario;
    std::uint64_t seed = 0;
    std::string method;
    double ssim = 0.0;
    double nmse = 0.0;
    double runtime_s = 0.0;
};

/// Appends "scenario,seed,method,ssim,nmse,runtime_s" rows under an exclusive file lock; writes the header
/// when the file is new.
void append_metrics(const std::filesystem::path &path, const MetricsRow &row);
std::string scenario_label(const ExperimentConfig &config);

struct TrialOutcome
{
    std::uint64_t seed = 0;
    bool diverged = false;
    MetricsRow metrics;
    std::string message;
};

struct RunSummary
{
    std::vector<TrialOutcome> trials;
    [[nodiscard]] bool all_diverged() const;
};

/// Trial directory for one seed: <out>/seed_<seed>.
std::filesystem::path trial_dir(const std::filesystem::path &out, std::uint64_t trial_seed);

/// Per trial: truth.rmt, slf_<r>.rmt (I x J x 1), psd.rmt (K x R x 1), manifest.txt.
void cmd_generate(const ExperimentConfig &config, const std::filesystem::path &out);
/// Per trial: mask.csv plus measurements.rmt (N x K x 1) or labels.csv and quantizer.txt.
void cmd_sample(const ExperimentConfig &config, const std::filesystem::path &out);
/// Per trial: generates and samples when missing, recovers, writes estimate.rmt, trace.csv, trace_meta.txt,
/// and appends to <out>/metrics.csv. Trials run on up to RMC_THREADS threads.
RunSummary cmd_recover(const ExperimentConfig &config, const std::filesystem::path &out);
/// Scores every trial with an estimate into <out>/evaluation.csv.
void cmd_evaluate(const ExperimentConfig &config, const std::filesystem::path &out);
/// One CSV row per grid point; domain errors go to the row's error column.
void cmd_bound(const BoundGrid &grid, const std::filesystem::path &csv);
/// Recovers at every point of the sweep grid and writes <out>/sweep.csv with per-point means.
RunSummary cmd_sweep(const ExperimentConfig &config, const std::filesystem::path &out);

/// RMC_THREADS, clamped to at least 1; defaults to 1.
int trial_threads();

} // namespace rmcart

#endif // RMCART_EXPERIMENT_HPP
