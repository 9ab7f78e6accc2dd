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

#include "rmcart/experiment.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace rmcart;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.scenario.I = c.scenario.J = 16;
    c.scenario.K = 6;
    c.scenario.R = 2;
    c.scenario.Xc = 8.0;
    c.rho = 0.3;
    c.solver.max_iter = 20;
    c.solver.fit_steps = 10;
    return c;
}

std::string slurp(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines(const fs::path &path)
{
    std::vector<std::string> out;
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string &line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');)
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

int run_cli(const std::string &args)
{
    const std::string cmd = std::string(RMCART_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path &path, const std::string &text) { std::ofstream(path) << text; }

} // namespace

TEST_CASE("generate writes the standard scenario", "[experiment]")
{
    test::TempDir dir("exp");
    ExperimentConfig c;
    c.scenario.R = 3;
    cmd_generate(c, dir.path());
    const fs::path trial = trial_dir(dir.path(), 1);
    CHECK(tensor_read(trial / "truth.rmt").dims() == Dims3{64, 64, 64});
    for (int r = 0; r < 3; ++r)
        CHECK(tensor_read(trial / ("slf_" + std::to_string(r) + ".rmt")).dims() == Dims3{64, 64, 1});
    CHECK(!fs::exists(trial / "slf_3.rmt"));
    CHECK(tensor_read(trial / "psd.rmt").dims() == Dims3{64, 3, 1});
    const std::string manifest = slurp(trial / "manifest.txt");
    CHECK(manifest.find("# config_hash = ") != std::string::npos);
    CHECK(manifest.find("# trial_seed = 1") != std::string::npos);
}

TEST_CASE("generation and sampling are bit-reproducible", "[experiment]")
{
    test::TempDir a("exp"), b("exp");
    ExperimentConfig c = small_config();
    c.seeds = {4, 9};
    c.B = 3;
    for (const auto *d : {&a, &b})
    {
        cmd_generate(c, d->path());
        cmd_sample(c, d->path());
    }
    for (std::uint64_t seed : c.seeds)
        for (const char *name : {"truth.rmt", "slf_0.rmt", "slf_1.rmt", "psd.rmt", "mask.csv", "labels.csv",
                                 "quantizer.txt", "manifest.txt"})
        {
            const fs::path pa = trial_dir(a.path(), seed) / name;
            REQUIRE(fs::exists(pa));
            CHECK(slurp(pa) == slurp(trial_dir(b.path(), seed) / name));
        }
    CHECK(slurp(trial_dir(a.path(), 4) / "truth.rmt") != slurp(trial_dir(a.path(), 9) / "truth.rmt"));
}

TEST_CASE("idw recovery over five seeds", "[experiment]")
{
    test::TempDir dir("exp");
    ExperimentConfig c = small_config();
    c.method = Method::idw;
    c.seed = 1;
    c.trials = 5;
    const RunSummary summary = cmd_recover(c, dir.path());
    REQUIRE(summary.trials.size() == 5);
    CHECK(!summary.all_diverged());
    for (const auto &t : summary.trials)
    {
        CHECK(t.metrics.ssim >= -1.0);
        CHECK(t.metrics.ssim <= 1.0);
        CHECK(t.metrics.method == "idw");
    }
    const auto rows = lines(dir / "metrics.csv");
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "scenario,seed,method,ssim,nmse,runtime_s");
    CHECK(split(rows[1]).size() == 6);
    CHECK(split(rows[1])[0] == scenario_label(c));

    cmd_evaluate(c, dir.path());
    CHECK(lines(dir / "evaluation.csv").size() == 6);
}

TEST_CASE("quantized sampling routes the proposed method to the likelihood", "[experiment]")
{
    test::TempDir dir("exp");
    ExperimentConfig c = small_config();
    c.B = 3;
    c.rho = 0.2;
    const RunSummary summary = cmd_recover(c, dir.path());
    REQUIRE(summary.trials.size() == 1);
    const std::string meta = slurp(trial_dir(dir.path(), 1) / "trace_meta.txt");
    CHECK(meta.find("loss_kind = quantized") != std::string::npos);
    CHECK(fs::exists(trial_dir(dir.path(), 1) / "labels.csv"));

    test::TempDir fp("exp");
    c.B = 0;
    cmd_recover(c, fp.path());
    CHECK(slurp(trial_dir(fp.path(), 1) / "trace_meta.txt").find("loss_kind = fp") != std::string::npos);
}

TEST_CASE("manifest re-runs reproduce estimates bit-exactly", "[experiment]")
{
    test::TempDir first("exp"), second("exp");
    ExperimentConfig c = small_config();
    c.seed = 7;
    cmd_recover(c, first.path());
    const fs::path trial = trial_dir(first.path(), 7);
    const ExperimentConfig again = load_config(trial / "manifest.txt");
    const std::string manifest = slurp(trial / "manifest.txt");
    CHECK(config_hash(again) == manifest.substr(manifest.find("config_hash = ") + 14, 16));
    cmd_recover(again, second.path());
    CHECK(slurp(trial / "estimate.rmt") == slurp(trial_dir(second.path(), 7) / "estimate.rmt"));
    CHECK(slurp(trial / "trace.csv") == slurp(trial_dir(second.path(), 7) / "trace.csv"));
}

TEST_CASE("bound reports", "[experiment]")
{
    test::TempDir dir("exp");
    BoundGrid single;
    single.axes = {{"R", {3}}, {"epsilon", {0.25}}, {"W", {6}}, {"N", {410}}};
    cmd_bound(single, dir / "one.csv");
    const auto rows = lines(dir / "one.csv");
    REQUIRE(rows.size() == 2);
    const auto header = split(rows[0]);
    const auto cells = split(rows[1]);
    REQUIRE(cells.size() == header.size());
    const auto column = [&](const std::string &name) {
        return std::distance(header.begin(), std::find(header.begin(), header.end(), name));
    };
    const BoundParams p = single.points().front();
    CHECK(std::stod(cells[column("cover_Xunn")]) == cover_bound_Xunn(p));
    CHECK(cells[column("error")].empty());

    BoundGrid sweep;
    sweep.axes = {{"N", {10, 100, 1000, 10000}}};
    cmd_bound(sweep, dir / "n.csv");
    const auto nrows = lines(dir / "n.csv");
    REQUIRE(nrows.size() == 5);
    const auto t1 = column("fp_term1");
    for (std::size_t r = 2; r < nrows.size(); ++r)
        CHECK(std::stod(split(nrows[r])[t1]) < std::stod(split(nrows[r - 1])[t1]));

    BoundGrid eps;
    eps.axes = {{"epsilon", {0.1, 0.2, 0.4, 0.8}}};
    cmd_bound(eps, dir / "eps.csv");
    const auto erows = lines(dir / "eps.csv");
    const auto xc = column("cover_Xunn");
    for (std::size_t r = 2; r < erows.size(); ++r)
        CHECK(std::stod(split(erows[r])[xc]) < std::stod(split(erows[r - 1])[xc]));

    BoundGrid broken;
    broken.axes = {{"kappa", {0.0}}};
    cmd_bound(broken, dir / "bad.csv");
    CHECK(!split(lines(dir / "bad.csv")[1])[column("error")].empty());
}

TEST_CASE("sweep writes per-point means", "[experiment]")
{
    test::TempDir dir("exp");
    ExperimentConfig c = small_config();
    c.trials = 2;
    c.sweep_methods = {Method::idw, Method::btd};
    c.sweep_rho = {0.2, 0.4};
    c.btd_iters = 20;
    const RunSummary summary = cmd_sweep(c, dir.path());
    CHECK(summary.trials.size() == 8);
    CHECK(lines(dir / "sweep.csv").size() == 5);
}

TEST_CASE("command line exit codes", "[experiment][cli]")
{
    test::TempDir dir("cli");
    write_file(dir / "ok.cfg", "I = 16\nJ = 16\nK = 4\nR = 1\nXc = 8\nrho = 0.3\nmethod = idw\n");
    write_file(dir / "bad.cfg", "I = 16\ncolour = blue\n");
    write_file(dir / "grid.cfg", "R = 1, 2\nepsilon = 0.5\n");
    write_file(dir / "diverge.cfg",
               "I = 16\nJ = 16\nK = 4\nR = 2\nXc = 8\nrho = 0.3\ninit = xavier\npsd_step = 1e308\n");
    const std::string out = " --out " + (dir / "out").string();

    CHECK(run_cli("generate --config " + (dir / "ok.cfg").string() + out) == 0);
    CHECK(run_cli("recover --config " + (dir / "ok.cfg").string() + out + " --trials 2") == 0);
    CHECK(lines(dir / "out" / "metrics.csv").size() == 3);
    CHECK(run_cli("recover --config " + (dir / "bad.cfg").string() + out) == 2);
    CHECK(run_cli("recover --config " + (dir / "missing.cfg").string() + out) == 3);
    CHECK(run_cli("bound --config " + (dir / "grid.cfg").string() + " --out " + (dir / "b.csv").string()) == 0);
    CHECK(lines(dir / "b.csv").size() == 3);
    CHECK(run_cli("recover --config " + (dir / "diverge.cfg").string() + " --out " + (dir / "d").string()) == 4);
    CHECK(fs::exists(trial_dir(dir / "d", 1) / "diverged.txt"));
    CHECK(run_cli("frobnicate") != 0);
}
