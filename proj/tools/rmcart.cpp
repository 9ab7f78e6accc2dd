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

// rmcart: experiment driver.
//
//   rmcart generate --config exp.cfg --out runs/a
//   rmcart recover  --config exp.cfg --out runs/a --method idw --trials 5
//   rmcart bound    --config grid.cfg --out bound.csv

#include "rmcart/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode
{
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kIoError = 3,
    kAllDiverged = 4,
};

struct Flags
{
    std::string config;
    std::string out = "rmcart_out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<int> quantized;
    std::optional<int> trials;
};

rmcart::ExperimentConfig resolve(const Flags &flags)
{
    rmcart::ExperimentConfig config = flags.config.empty() ? rmcart::ExperimentConfig{}
                                                           : rmcart::load_config(flags.config);
    if (flags.seed)
    {
        config.seed = *flags.seed;
        config.seeds.clear();
    }
    if (flags.method)
        config.method = rmcart::parse_method(*flags.method);
    if (flags.quantized)
        config.B = *flags.quantized;
    if (flags.trials)
    {
        config.trials = *flags.trials;
        config.seeds.clear();
    }
    config.validate();
    return config;
}

int report(const rmcart::RunSummary &summary)
{
    for (const auto &t : summary.trials)
    {
        if (t.diverged)
            std::cerr << "seed " << t.seed << ": diverged: " << t.message << "\n";
        else
            std::cout << t.metrics.scenario << " seed " << t.seed << " " << t.metrics.method
                      << " ssim=" << t.metrics.ssim << " nmse=" << t.metrics.nmse
                      << " runtime_s=" << t.metrics.runtime_s << "\n";
    }
    return summary.all_diverged() ? kAllDiverged : kOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Radio map recovery from sparse sensor reports"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--config", flags.config, "key = value experiment file");
        cmd->add_option("--out", flags.out, "output directory")->capture_default_str();
        cmd->add_option("--seed", flags.seed, "base trial seed");
        cmd->add_option("--method", flags.method, "proposed | naive | idw | btd");
        cmd->add_option("--quantized", flags.quantized, "quantizer bits B (0 = full precision)");
        cmd->add_option("--trials", flags.trials, "number of trial seeds, starting at --seed");
    };

    auto *generate = app.add_subcommand("generate", "write ground-truth maps, SLFs and PSDs");
    auto *sample = app.add_subcommand("sample", "draw sensor locations and reports");
    auto *recover = app.add_subcommand("recover", "recover maps and append metrics");
    auto *evaluate = app.add_subcommand("evaluate", "score existing estimates");
    auto *bound = app.add_subcommand("bound", "evaluate covering-number bounds over a parameter grid");
    auto *sweep = app.add_subcommand("sweep", "recover over a grid of scenarios and methods");
    for (auto *cmd : {generate, sample, recover, evaluate, sweep})
        add_common(cmd);
    bound->add_option("--config", flags.config, "bound grid file (key = v1, v2, ...)")->required();
    bound->add_option("--out", flags.out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (bound->parsed())
        {
            rmcart::cmd_bound(rmcart::load_bound_grid(flags.config), flags.out);
            return kOk;
        }
        const rmcart::ExperimentConfig config = resolve(flags);
        if (generate->parsed())
            rmcart::cmd_generate(config, flags.out);
        else if (sample->parsed())
            rmcart::cmd_sample(config, flags.out);
        else if (recover->parsed())
            return report(rmcart::cmd_recover(config, flags.out));
        else if (evaluate->parsed())
            rmcart::cmd_evaluate(config, flags.out);
        else if (sweep->parsed())
            return report(rmcart::cmd_sweep(config, flags.out));
        return kOk;
    }
    catch (const rmcart::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    catch (const rmcart::FormatError &e)
    {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    }
    catch (const std::filesystem::filesystem_error &e)
    {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
