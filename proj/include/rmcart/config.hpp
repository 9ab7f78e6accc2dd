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

#ifndef RMCART_CONFIG_HPP
#define RMCART_CONFIG_HPP

#include "rmcart/analysis.hpp"
#include "rmcart/baselines.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace rmcart {

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class Method
{
    proposed,
    naive,
    idw,
    btd,
};

Method parse_method(const std::string &name);
std::string to_string(Method m);

/// Everything one experiment needs. Loaded from a key=value file; see README for the keys.
struct ExperimentConfig
{
    ScenarioParams scenario;
    double rho = 0.1;
    int B = 0;                 ///< quantizer bits; 0 = full-precision reports
    double sigma = 0.1;        ///< quantizer noise in h-units
    double a_offset = 1e-3;
    std::uint64_t seed = 1;
    Method method = Method::proposed;
    SolverConfig solver;
    int R_hat = 0;             ///< emitters assumed by the recovery; 0 = scenario R
    int btd_rank = 4;
    int btd_iters = 200;
    double idw_power = 2.0;
    int trials = 1;
    std::vector<std::uint64_t> seeds;   ///< explicit trial seeds; overrides seed/trials when set

    // Grid axes for the sweep command; an empty axis keeps the base value.
    std::vector<int> sweep_R;
    std::vector<double> sweep_rho;
    std::vector<double> sweep_Xc;
    std::vector<double> sweep_eta;
    std::vector<int> sweep_R_hat;
    std::vector<Method> sweep_methods;

    [[nodiscard]] int recovery_rank() const { return R_hat > 0 ? R_hat : scenario.R; }
    /// `seeds` if given, else seed, seed + 1, ..., seed + trials - 1.
    [[nodiscard]] std::vector<std::uint64_t> trial_seeds() const;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::istream &in);
ExperimentConfig load_config(const std::filesystem::path &path);

/// Sets one key. Throws ConfigError for unknown keys or unparsable values.
void apply_setting(ExperimentConfig &config, const std::string &key, const std::string &value);

/// Every key with its value, one "key = value" per line, in a fixed order. Parsing it gives the same config.
std::string canonical_text(const ExperimentConfig &config);

/// FNV-1a over canonical_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig &config);

/// Bound grid: each key of BoundParams may list several comma-separated values.
struct BoundGrid
{
    std::map<std::string, std::vector<double>> axes;
    /// Cartesian product in key order, last key fastest.
    [[nodiscard]] std::vector<BoundParams> points() const;
};

BoundGrid parse_bound_grid(std::istream &in);
BoundGrid load_bound_grid(const std::filesystem::path &path);

} // namespace rmcart

#endif // RMCART_CONFIG_HPP
