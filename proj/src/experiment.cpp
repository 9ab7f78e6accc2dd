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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fcntl.h>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <sys/file.h>
#include <thread>
#include <unistd.h>

namespace fs = std::filesystem;

namespace rmcart {

TrialSeeds TrialSeeds::from(std::uint64_t trial_seed)
{
    const Seed base{trial_seed};
    return {base.derive(1), base.derive(2), base.derive(3), base.derive(4)};
}

// Simulation ------------------------------------------------------------------

TrialData observe(const ExperimentConfig &config, Scenario scenario, SamplingMask mask, std::uint64_t trial_seed)
{
    Measurements measurements = apply_mask(scenario.X, mask);
    const Eigen::MatrixXd h = h_transform(measurements.fibers.array(), config.a_offset).matrix();
    Observations obs;
    if (config.B == 0)
        obs = FpObservations{h, config.a_offset};
    else
    {
        const QuantizerSpec spec = design_quantizer(h, config.B, config.sigma, config.a_offset);
        obs = QuantObservations{quantize_fibers(measurements, spec, TrialSeeds::from(trial_seed).quantizer), spec};
    }
    return {std::move(scenario), std::move(mask), std::move(measurements), std::move(obs)};
}

TrialData simulate_trial(const ExperimentConfig &config, std::uint64_t trial_seed)
{
    const TrialSeeds seeds = TrialSeeds::from(trial_seed);
    Scenario scenario = generate_scenario(config.scenario, seeds.scenario);
    SamplingMask mask = mask_sample(config.scenario.I, config.scenario.J, config.rho, seeds.mask);
    return observe(config, std::move(scenario), std::move(mask), trial_seed);
}

MethodOutput run_method(const ExperimentConfig &config, const SamplingMask &mask, const Observations &obs, Dims3 dims,
                        std::uint64_t trial_seed)
{
    const Seed seed = TrialSeeds::from(trial_seed).method;
    const int R = config.recovery_rank();
    MethodOutput out;
    switch (config.method)
    {
    case Method::proposed: {
        if (dims.I != dims.J)
            throw ConfigError("method 'proposed' needs a square grid");
        DecoderArch arch;
        try
        {
            arch = DecoderArch::for_side(dims.I);
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(std::string("method 'proposed': ") + e.what());
        }
        RecoveryResult r = recover(obs, mask, arch, R, config.solver, seed);
        out.estimate = std::move(r.estimate);
        out.trace = std::move(r.trace);
        out.loss_kind = r.loss_kind;
        out.param_count = count_params(arch) + static_cast<long>(arch.latent_size()) * R;
        break;
    }
    case Method::naive: {
        if (dims.I != dims.J)
            throw ConfigError("method 'naive' needs a square grid");
        NaiveResult r = naive_unn_recover(obs, mask, dims, R, config.solver, seed);
        out.estimate = std::move(r.estimate);
        out.trace = std::move(r.trace);
        out.loss_kind = loss_kind(obs);
        out.param_count = r.sizing.param_count;
        break;
    }
    case Method::idw:
        out.estimate = idw_interpolate({mask, linear_proxy(obs)}, dims, config.idw_power, transform_offset(obs));
        out.loss_kind = "none";
        break;
    case Method::btd: {
        BtdConfig btd;
        btd.rank_L = config.btd_rank;
        btd.iters = config.btd_iters;
        btd.seed = seed;
        BtdResult r = btd_fit({mask, linear_proxy(obs)}, dims, R, btd);
        out.estimate = std::move(r.estimate);
        out.trace = std::move(r.objective);
        out.loss_kind = "btd_ls";
        break;
    }
    }
    return out;
}

// Metrics ---------------------------------------------------------------------

std::string scenario_label(const ExperimentConfig &config)
{
    std::ostringstream os;
    os << "R" << config.scenario.R << "_Xc" << config.scenario.Xc << "_eta" << config.scenario.eta << "_rho"
       << config.rho << "_B" << config.B << "_Rhat" << config.recovery_rank();
    return os.str();
}

namespace {

std::mutex metrics_mutex;

std::string format_metric(double v)
{
    if (std::isnan(v))
        return "nan";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

/// Exclusive advisory lock on an open descriptor for the lifetime of the object.
class FileLock
{
  public:
    explicit FileLock(const fs::path &path) : fd_(::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644))
    {
        if (fd_ < 0)
            throw FormatError(FormatErrc::io_error, "cannot open " + path.string());
        ::flock(fd_, LOCK_EX);
    }
    ~FileLock()
    {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock &) = delete;
    FileLock &operator=(const FileLock &) = delete;
    [[nodiscard]] int fd() const { return fd_; }

  private:
    int fd_;
};

std::string metrics_line(const MetricsRow &row)
{
    return row.scenario + "," + std::to_string(row.seed) + "," + row.method + "," + format_metric(row.ssim) + "," +
           format_metric(row.nmse) + "," + format_metric(row.runtime_s) + "\n";
}

constexpr const char *kMetricsHeader = "scenario,seed,method,ssim,nmse,runtime_s\n";

} // namespace

void append_metrics(const fs::path &path, const MetricsRow &row)
{
    std::lock_guard guard(metrics_mutex);
    FileLock lock(path);
    std::string text;
    if (::lseek(lock.fd(), 0, SEEK_END) == 0)
        text = kMetricsHeader;
    text += metrics_line(row);
    if (::write(lock.fd(), text.data(), text.size()) != static_cast<ssize_t>(text.size()))
        throw FormatError(FormatErrc::io_error, "write failed for " + path.string());
}

bool RunSummary::all_diverged() const
{
    if (trials.empty())
        return false;
    for (const auto &t : trials)
        if (!t.diverged)
            return false;
    return true;
}

fs::path trial_dir(const fs::path &out, std::uint64_t trial_seed)
{
    return out / ("seed_" + std::to_string(trial_seed));
}

int trial_threads()
{
    const char *env = std::getenv("RMC_THREADS");
    if (!env)
        return 1;
    try
    {
        return std::max(1, std::stoi(env));
    }
    catch (const std::exception &)
    {
        throw ConfigError(std::string("RMC_THREADS must be an integer, got '") + env + "'");
    }
}

// Files -----------------------------------------------------------------------

namespace {

void ensure_dir(const fs::path &dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw FormatError(FormatErrc::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out || !(out << text))
        throw FormatError(FormatErrc::io_error, "cannot write " + path.string());
}

ExperimentConfig trial_config(const ExperimentConfig &config, std::uint64_t trial_seed)
{
    ExperimentConfig c = config;
    c.seed = trial_seed;
    c.trials = 1;
    c.seeds = {trial_seed};
    return c;
}

/// A manifest is a valid config file whose comment header records hash and derived seeds.
void write_manifest(const fs::path &dir, const ExperimentConfig &config, std::uint64_t trial_seed,
                    const std::vector<std::string> &files)
{
    const ExperimentConfig c = trial_config(config, trial_seed);
    const TrialSeeds seeds = TrialSeeds::from(trial_seed);
    std::ostringstream os;
    os << "# rmcart manifest\n"
       << "# config_hash = " << config_hash(c) << "\n"
       << "# trial_seed = " << trial_seed << "\n"
       << "# scenario_seed = " << seeds.scenario.value << "\n"
       << "# mask_seed = " << seeds.mask.value << "\n"
       << "# quantizer_seed = " << seeds.quantizer.value << "\n"
       << "# method_seed = " << seeds.method.value << "\n";
    for (const auto &f : files)
        os << "# file = " << f << "\n";
    os << canonical_text(c);
    write_text(dir / "manifest.txt", os.str());
}

RadioMapTensor column_tensor(const Eigen::Ref<const RowMatrixXd> &M)
{
    return RadioMapTensor(Dims3{static_cast<int>(M.rows()), static_cast<int>(M.cols()), 1},
                          std::vector<double>(M.data(), M.data() + M.size()));
}

std::vector<std::string> generate_into(const ExperimentConfig &config, std::uint64_t trial_seed, const fs::path &dir)
{
    ensure_dir(dir);
    const Scenario sc = generate_scenario(config.scenario, TrialSeeds::from(trial_seed).scenario);
    std::vector<std::string> files{"truth.rmt"};
    tensor_write(dir / "truth.rmt", sc.X);
    for (std::size_t r = 0; r < sc.slfs.size(); ++r)
    {
        const std::string name = "slf_" + std::to_string(r) + ".rmt";
        tensor_write(dir / name, column_tensor(sc.slfs[r]));
        files.push_back(name);
    }
    const RowMatrixXd C = sc.C;
    tensor_write(dir / "psd.rmt", column_tensor(C));
    files.push_back("psd.rmt");
    return files;
}

Scenario read_scenario(const fs::path &dir)
{
    Scenario sc;
    sc.X = tensor_read(dir / "truth.rmt");
    const RadioMapTensor psd = tensor_read(dir / "psd.rmt");
    sc.C = Eigen::Map<const RowMatrixXd>(psd.values().data(), psd.I(), psd.J());
    for (int r = 0; r < psd.J(); ++r)
    {
        const RadioMapTensor s = tensor_read(dir / ("slf_" + std::to_string(r) + ".rmt"));
        sc.slfs.emplace_back(Eigen::Map<const RowMatrixXd>(s.values().data(), s.I(), s.J()));
    }
    return sc;
}

void write_labels(const fs::path &path, const RowMatrixXi &labels)
{
    std::ofstream out(path, std::ios::trunc);
    for (Eigen::Index s = 0; s < labels.rows(); ++s)
        for (Eigen::Index k = 0; k < labels.cols(); ++k)
            out << labels(s, k) << (k + 1 == labels.cols() ? '\n' : ',');
    if (!out)
        throw FormatError(FormatErrc::io_error, "cannot write " + path.string());
}

void write_quantizer(const fs::path &path, const QuantizerSpec &spec)
{
    std::ostringstream os;
    os << std::setprecision(17) << "B = " << spec.B << "\nsigma = " << spec.sigma << "\na_offset = " << spec.a_offset
       << "\nbins =";
    for (double b : spec.bins)
        os << ' ' << b;
    os << '\n';
    write_text(path, os.str());
}

std::vector<std::string> sample_into(const fs::path &dir, const TrialData &data)
{
    std::vector<std::string> files{"mask.csv"};
    mask_write(dir / "mask.csv", data.mask);
    if (std::holds_alternative<FpObservations>(data.obs))
    {
        tensor_write(dir / "measurements.rmt", column_tensor(RowMatrixXd(data.measurements.fibers)));
        files.push_back("measurements.rmt");
    }
    else
    {
        const auto &q = std::get<QuantObservations>(data.obs);
        write_labels(dir / "labels.csv", q.labels);
        write_quantizer(dir / "quantizer.txt", q.spec);
        files.insert(files.end(), {"labels.csv", "quantizer.txt"});
    }
    return files;
}

/// Truth from disk when present (generated otherwise), mask from disk when present.
TrialData load_or_simulate(const ExperimentConfig &config, std::uint64_t trial_seed, const fs::path &dir,
                           std::vector<std::string> &files)
{
    if (!fs::exists(dir / "truth.rmt"))
        files = generate_into(config, trial_seed, dir);
    else
        files = {"truth.rmt", "psd.rmt"};
    Scenario sc = read_scenario(dir);
    if (sc.X.I() != config.scenario.I || sc.X.J() != config.scenario.J || sc.X.K() != config.scenario.K)
        throw ConfigError("existing truth.rmt in " + dir.string() + " does not match the configured dims");
    const bool have_mask = fs::exists(dir / "mask.csv");
    SamplingMask mask = have_mask ? mask_read(dir / "mask.csv", sc.X.I(), sc.X.J())
                                  : mask_sample(sc.X.I(), sc.X.J(), config.rho, TrialSeeds::from(trial_seed).mask);
    TrialData data = observe(config, std::move(sc), std::move(mask), trial_seed);
    const auto sampled = sample_into(dir, data);
    files.insert(files.end(), sampled.begin(), sampled.end());
    return data;
}

template <typename Fn>
void for_each_trial(const std::vector<std::uint64_t> &seeds, Fn &&fn)
{
    const int threads = std::min<int>(trial_threads(), static_cast<int>(seeds.size()));
    if (threads <= 1)
    {
        for (std::size_t n = 0; n < seeds.size(); ++n)
            fn(n);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t n = next++; n < seeds.size(); n = next++)
            {
                try
                {
                    fn(n);
                }
                catch (...)
                {
                    std::lock_guard guard(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace

// Commands --------------------------------------------------------------------

void cmd_generate(const ExperimentConfig &config, const fs::path &out)
{
    config.validate();
    for (std::uint64_t seed : config.trial_seeds())
    {
        const fs::path dir = trial_dir(out, seed);
        write_manifest(dir, config, seed, generate_into(config, seed, dir));
    }
}

void cmd_sample(const ExperimentConfig &config, const fs::path &out)
{
    config.validate();
    for (std::uint64_t seed : config.trial_seeds())
    {
        const fs::path dir = trial_dir(out, seed);
        std::vector<std::string> files;
        load_or_simulate(config, seed, dir, files);
        write_manifest(dir, config, seed, files);
    }
}

RunSummary cmd_recover(const ExperimentConfig &config, const fs::path &out)
{
    config.validate();
    ensure_dir(out);
    const auto seeds = config.trial_seeds();
    RunSummary summary;
    summary.trials.resize(seeds.size());
    for_each_trial(seeds, [&](std::size_t n) {
        const std::uint64_t seed = seeds[n];
        const fs::path dir = trial_dir(out, seed);
        std::vector<std::string> files;
        const TrialData data = load_or_simulate(config, seed, dir, files);

        TrialOutcome outcome;
        outcome.seed = seed;
        outcome.metrics = {scenario_label(config), seed, to_string(config.method), NAN, NAN, 0.0};
        const auto start = std::chrono::steady_clock::now();
        try
        {
            const MethodOutput result = run_method(config, data.mask, data.obs, data.scenario.X.dims(), seed);
            outcome.metrics.runtime_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            outcome.metrics.ssim = ssim_log_avg(data.scenario.X, result.estimate, config.a_offset);
            outcome.metrics.nmse = nmse(data.scenario.X, result.estimate);
            tensor_write(dir / "estimate.rmt", result.estimate);
            trace_write(dir / "trace.csv", result.trace);
            write_text(dir / "trace_meta.txt", "method = " + to_string(config.method) + "\nloss_kind = " +
                                                   result.loss_kind + "\nparam_count = " +
                                                   std::to_string(result.param_count) + "\n");
            files.insert(files.end(), {"estimate.rmt", "trace.csv", "trace_meta.txt"});
        }
        catch (const DivergedError &e)
        {
            outcome.metrics.runtime_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            outcome.diverged = true;
            outcome.message = e.what();
            trace_write(dir / "trace.csv", e.trace());
            write_text(dir / "diverged.txt", std::string(e.what()) + "\n");
            files.insert(files.end(), {"trace.csv", "diverged.txt"});
        }
        write_manifest(dir, config, seed, files);
        append_metrics(out / "metrics.csv", outcome.metrics);
        summary.trials[n] = std::move(outcome);
    });
    return summary;
}

void cmd_evaluate(const ExperimentConfig &config, const fs::path &out)
{
    config.validate();
    std::string text = kMetricsHeader;
    for (std::uint64_t seed : config.trial_seeds())
    {
        const fs::path dir = trial_dir(out, seed);
        if (!fs::exists(dir / "estimate.rmt"))
            continue;
        const RadioMapTensor truth = tensor_read(dir / "truth.rmt");
        const RadioMapTensor estimate = tensor_read(dir / "estimate.rmt");
        const MetricsRow row{scenario_label(config), seed, to_string(config.method),
                             ssim_log_avg(truth, estimate, config.a_offset), nmse(truth, estimate), 0.0};
        text += metrics_line(row);
    }
    ensure_dir(out);
    write_text(out / "evaluation.csv", text);
}

void cmd_bound(const BoundGrid &grid, const fs::path &csv)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "R,K,D0,L,W,s,b,a,kappa,gamma,P,epsilon,N,nu,cover_H,cover_Xunn,log_args_exceed_one,"
          "fp_term1,fp_term2,q_term1,q_term2,error\n";
    for (const BoundParams &p : grid.points())
    {
        os << p.R << ',' << p.K << ',' << p.D0 << ',' << p.L << ',' << p.W << ',' << p.s << ',' << p.b << ','
           << p.a << ',' << p.kappa << ',' << p.gamma << ',' << p.P << ',' << p.epsilon << ',' << p.N << ','
           << p.nu << ',';
        try
        {
            const double h = cover_bound_H(p);
            const double x = cover_bound_Xunn(p);
            os << h << ',' << x << ',' << (log_arguments_exceed_one(p) ? 1 : 0) << ',';
            if (p.N > 0 && x >= 0.0)
            {
                const PropTerms fp = prop_bound_terms(p, false);
                const PropTerms q = prop_bound_terms(p, true);
                os << fp.term1 << ',' << fp.term2 << ',' << q.term1 << ',' << q.term2 << ",\n";
            }
            else
                os << ",,,,prop terms undefined\n";
        }
        catch (const std::exception &e)
        {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            os << ",,,,,,," << msg << '\n';
        }
    }
    if (csv.has_parent_path())
        ensure_dir(csv.parent_path());
    write_text(csv, os.str());
}

RunSummary cmd_sweep(const ExperimentConfig &config, const fs::path &out)
{
    config.validate();
    ensure_dir(out);
    auto axis = [](const auto &values, auto base) {
        using T = decltype(base);
        return values.empty() ? std::vector<T>{base} : std::vector<T>(values.begin(), values.end());
    };
    const auto Rs = axis(config.sweep_R, config.scenario.R);
    const auto rhos = axis(config.sweep_rho, config.rho);
    const auto Xcs = axis(config.sweep_Xc, config.scenario.Xc);
    const auto etas = axis(config.sweep_eta, config.scenario.eta);
    const auto R_hats = axis(config.sweep_R_hat, config.R_hat);
    const auto methods = axis(config.sweep_methods, config.method);

    RunSummary all;
    std::ostringstream table;
    table << "scenario,method,trials,diverged,mean_ssim,mean_nmse,mean_runtime_s\n" << std::setprecision(10);
    for (int R : Rs)
        for (double rho : rhos)
            for (double Xc : Xcs)
                for (double eta : etas)
                    for (int R_hat : R_hats)
                        for (Method method : methods)
                        {
                            ExperimentConfig c = config;
                            c.scenario.R = R;
                            c.rho = rho;
                            c.scenario.Xc = Xc;
                            c.scenario.eta = eta;
                            c.R_hat = R_hat;
                            c.method = method;
                            c.sweep_R.clear();
                            c.sweep_rho.clear();
                            c.sweep_Xc.clear();
                            c.sweep_eta.clear();
                            c.sweep_R_hat.clear();
                            c.sweep_methods.clear();
                            const std::string label = scenario_label(c);
                            const fs::path point = out / label / to_string(method);
                            ensure_dir(point);
                            RunSummary s = cmd_recover(c, point);

                            double ssim = 0.0, err = 0.0, runtime = 0.0;
                            int ok = 0, diverged = 0;
                            for (const auto &t : s.trials)
                            {
                                append_metrics(out / "metrics.csv", t.metrics);
                                if (t.diverged)
                                {
                                    ++diverged;
                                    continue;
                                }
                                ++ok;
                                ssim += t.metrics.ssim;
                                err += t.metrics.nmse;
                                runtime += t.metrics.runtime_s;
                            }
                            table << label << ',' << to_string(method) << ',' << s.trials.size() << ',' << diverged
                                  << ',';
                            if (ok)
                                table << ssim / ok << ',' << err / ok << ',' << runtime / ok << '\n';
                            else
                                table << "nan,nan,nan\n";
                            all.trials.insert(all.trials.end(), s.trials.begin(), s.trials.end());
                        }
    write_text(out / "sweep.csv", table.str());
    return all;
}

} // namespace rmcart
