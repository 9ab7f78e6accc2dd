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

#include "rmcart/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace rmcart {

Method parse_method(const std::string &name)
{
    if (name == "proposed")
        return Method::proposed;
    if (name == "naive")
        return Method::naive;
    if (name == "idw")
        return Method::idw;
    if (name == "btd")
        return Method::btd;
    throw ConfigError("unknown method '" + name + "' (expected proposed, naive, idw or btd)");
}

std::string to_string(Method m)
{
    switch (m)
    {
    case Method::proposed:
        return "proposed";
    case Method::naive:
        return "naive";
    case Method::idw:
        return "idw";
    case Method::btd:
        return "btd";
    }
    return "?";
}

// Value parsing ---------------------------------------------------------------

namespace {

std::string trim(const std::string &s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string &key, const std::string &text)
{
    T value{};
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("bad value for '" + key + "': '" + text + "'");
    return value;
}

template <typename T>
std::vector<T> parse_list(const std::string &key, const std::string &text)
{
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_number<T>(key, trim(item)));
    return out;
}

template <typename T>
std::string format_number(T value)
{
    std::ostringstream os;
    os << std::setprecision(17) << value;
    return os.str();
}

template <typename T>
std::string format_list(const std::vector<T> &values)
{
    std::string out;
    for (std::size_t n = 0; n < values.size(); ++n)
        out += (n ? "," : "") + format_number(values[n]);
    return out;
}

struct Key
{
    const char *name;
    std::function<void(ExperimentConfig &, const std::string &)> set;
    std::function<std::string(const ExperimentConfig &)> get;
};

template <typename T>
Key number_key(const char *name, T ExperimentConfig::*field)
{
    return {name, [=](ExperimentConfig &c, const std::string &v) { c.*field = parse_number<T>(name, v); },
            [=](const ExperimentConfig &c) { return format_number(c.*field); }};
}

template <typename T, typename Member>
Key nested_key(const char *name, Member ExperimentConfig::*outer, T Member::*field)
{
    return {name, [=](ExperimentConfig &c, const std::string &v) { (c.*outer).*field = parse_number<T>(name, v); },
            [=](const ExperimentConfig &c) { return format_number((c.*outer).*field); }};
}

template <typename T>
Key list_key(const char *name, std::vector<T> ExperimentConfig::*field)
{
    return {name, [=](ExperimentConfig &c, const std::string &v) { c.*field = parse_list<T>(name, v); },
            [=](const ExperimentConfig &c) { return format_list(c.*field); }};
}

template <typename T>
Key psd_key(const char *name, T PsdRanges::*field)
{
    return {name, [=](ExperimentConfig &c, const std::string &v) { c.scenario.psd.*field = parse_number<T>(name, v); },
            [=](const ExperimentConfig &c) { return format_number(c.scenario.psd.*field); }};
}

const std::vector<Key> &keys()
{
    using E = ExperimentConfig;
    static const std::vector<Key> table = {
        nested_key("I", &E::scenario, &ScenarioParams::I),
        nested_key("J", &E::scenario, &ScenarioParams::J),
        nested_key("K", &E::scenario, &ScenarioParams::K),
        nested_key("R", &E::scenario, &ScenarioParams::R),
        nested_key("Xc", &E::scenario, &ScenarioParams::Xc),
        nested_key("eta", &E::scenario, &ScenarioParams::eta),
        nested_key("path_loss_exponent", &E::scenario, &ScenarioParams::path_loss_exponent),
        psd_key("psd_bumps_min", &PsdRanges::bumps_min),
        psd_key("psd_bumps_max", &PsdRanges::bumps_max),
        psd_key("psd_amp_min", &PsdRanges::amp_min),
        psd_key("psd_amp_max", &PsdRanges::amp_max),
        psd_key("psd_width_min", &PsdRanges::width_min),
        psd_key("psd_width_max", &PsdRanges::width_max),
        number_key("rho", &E::rho),
        number_key("B", &E::B),
        number_key("sigma", &E::sigma),
        number_key("a_offset", &E::a_offset),
        number_key("seed", &E::seed),
        number_key("trials", &E::trials),
        list_key("seeds", &E::seeds),
        {"method", [](E &c, const std::string &v) { c.method = parse_method(v); },
         [](const E &c) { return to_string(c.method); }},
        {"init",
         [](E &c, const std::string &v) {
             try
             {
                 c.solver.init = parse_warm_start(v);
             }
             catch (const std::invalid_argument &e)
             {
                 throw ConfigError(e.what());
             }
         },
         [](const E &c) { return to_string(c.solver.init); }},
        nested_key("decoder_step", &E::solver, &SolverConfig::decoder_step),
        nested_key("psd_step", &E::solver, &SolverConfig::psd_step),
        nested_key("max_iter", &E::solver, &SolverConfig::max_iter),
        nested_key("tol", &E::solver, &SolverConfig::tol),
        nested_key("fit_steps", &E::solver, &SolverConfig::fit_steps),
        {"lambda1", [](E &c, const std::string &v) { c.solver.reg.lambda1 = parse_number<double>("lambda1", v); },
         [](const E &c) { return format_number(c.solver.reg.lambda1); }},
        {"lambda2", [](E &c, const std::string &v) { c.solver.reg.lambda2 = parse_number<double>("lambda2", v); },
         [](const E &c) { return format_number(c.solver.reg.lambda2); }},
        {"lambda3", [](E &c, const std::string &v) { c.solver.reg.lambda3 = parse_number<double>("lambda3", v); },
         [](const E &c) { return format_number(c.solver.reg.lambda3); }},
        {"adam_beta1", [](E &c, const std::string &v) { c.solver.adam.beta1 = parse_number<double>("adam_beta1", v); },
         [](const E &c) { return format_number(c.solver.adam.beta1); }},
        {"adam_beta2", [](E &c, const std::string &v) { c.solver.adam.beta2 = parse_number<double>("adam_beta2", v); },
         [](const E &c) { return format_number(c.solver.adam.beta2); }},
        {"adam_epsilon",
         [](E &c, const std::string &v) { c.solver.adam.epsilon = parse_number<double>("adam_epsilon", v); },
         [](const E &c) { return format_number(c.solver.adam.epsilon); }},
        number_key("R_hat", &E::R_hat),
        number_key("btd_rank", &E::btd_rank),
        number_key("btd_iters", &E::btd_iters),
        number_key("idw_power", &E::idw_power),
        list_key("sweep_R", &E::sweep_R),
        list_key("sweep_rho", &E::sweep_rho),
        list_key("sweep_Xc", &E::sweep_Xc),
        list_key("sweep_eta", &E::sweep_eta),
        list_key("sweep_R_hat", &E::sweep_R_hat),
        {"sweep_methods",
         [](E &c, const std::string &v) {
             c.sweep_methods.clear();
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ','))
                 c.sweep_methods.push_back(parse_method(trim(item)));
         },
         [](const E &c) {
             std::string out;
             for (std::size_t n = 0; n < c.sweep_methods.size(); ++n)
                 out += (n ? "," : "") + to_string(c.sweep_methods[n]);
             return out;
         }},
    };
    return table;
}

} // namespace

std::vector<std::uint64_t> ExperimentConfig::trial_seeds() const
{
    if (!seeds.empty())
        return seeds;
    std::vector<std::uint64_t> out;
    for (int t = 0; t < trials; ++t)
        out.push_back(seed + static_cast<std::uint64_t>(t));
    return out;
}

void ExperimentConfig::validate() const
{
    const auto &s = scenario;
    if (s.I < 1 || s.J < 1 || s.K < 1 || s.R < 1)
        throw ConfigError("I, J, K and R must be >= 1");
    if (s.R > s.I * s.J)
        throw ConfigError("R exceeds the number of grid cells");
    if (!(s.Xc > 0.0) || !(s.eta >= 0.0) || !(s.path_loss_exponent > 0.0))
        throw ConfigError("need Xc > 0, eta >= 0, path_loss_exponent > 0");
    const auto &p = s.psd;
    if (p.bumps_min < 1 || p.bumps_max < p.bumps_min || !(p.amp_min > 0.0) || p.amp_max < p.amp_min ||
        !(p.width_min > 0.0) || p.width_max < p.width_min)
        throw ConfigError("psd_* ranges must be positive and ordered");
    if (!(rho > 0.0) || rho > 1.0)
        throw ConfigError("rho must lie in (0, 1]");
    if (B < 0 || B > 16)
        throw ConfigError("B must lie in [0, 16]");
    if (!(sigma > 0.0) || !(a_offset > 0.0))
        throw ConfigError("sigma and a_offset must be positive");
    if (trials < 1)
        throw ConfigError("trials must be >= 1");
    if (R_hat < 0 || btd_rank < 1 || btd_iters < 1 || !(idw_power > 0.0))
        throw ConfigError("need R_hat >= 0, btd_rank >= 1, btd_iters >= 1, idw_power > 0");
    try
    {
        solver.validate();
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError(e.what());
    }
    for (int r : sweep_R)
        if (r < 1)
            throw ConfigError("sweep_R entries must be >= 1");
    for (int r : sweep_R_hat)
        if (r < 0)
            throw ConfigError("sweep_R_hat entries must be >= 0");
    for (double v : sweep_rho)
        if (!(v > 0.0) || v > 1.0)
            throw ConfigError("sweep_rho entries must lie in (0, 1]");
    for (double v : sweep_Xc)
        if (!(v > 0.0))
            throw ConfigError("sweep_Xc entries must be positive");
    for (double v : sweep_eta)
        if (!(v >= 0.0))
            throw ConfigError("sweep_eta entries must be >= 0");
}

void apply_setting(ExperimentConfig &config, const std::string &key, const std::string &value)
{
    for (const auto &k : keys())
        if (key == k.name)
        {
            k.set(config, value);
            return;
        }
    throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream &in)
{
    ExperimentConfig config;
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError(FormatErrc::io_error, "cannot open config " + path.string());
    return parse_config(in);
}

std::string canonical_text(const ExperimentConfig &config)
{
    std::string out;
    for (const auto &k : keys())
        out += std::string(k.name) + " = " + k.get(config) + "\n";
    return out;
}

std::string config_hash(const ExperimentConfig &config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(config))
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Bound grids -----------------------------------------------------------------

namespace {

using BoundSetter = std::function<void(BoundParams &, double)>;

const std::map<std::string, BoundSetter> &bound_keys()
{
    auto integer = [](int BoundParams::*f) {
        return BoundSetter([f](BoundParams &p, double v) { p.*f = static_cast<int>(v); });
    };
    auto real = [](double BoundParams::*f) { return BoundSetter([f](BoundParams &p, double v) { p.*f = v; }); };
    static const std::map<std::string, BoundSetter> table = {
        {"R", integer(&BoundParams::R)},
        {"K", integer(&BoundParams::K)},
        {"D0", integer(&BoundParams::D0)},
        {"L", integer(&BoundParams::L)},
        {"W", integer(&BoundParams::W)},
        {"I", integer(&BoundParams::I)},
        {"J", integer(&BoundParams::J)},
        {"s", real(&BoundParams::s)},
        {"b", real(&BoundParams::b)},
        {"a", real(&BoundParams::a)},
        {"kappa", real(&BoundParams::kappa)},
        {"gamma", real(&BoundParams::gamma)},
        {"P", real(&BoundParams::P)},
        {"epsilon", real(&BoundParams::epsilon)},
        {"delta", real(&BoundParams::delta)},
        {"nu", real(&BoundParams::nu)},
        {"N", BoundSetter([](BoundParams &p, double v) { p.N = static_cast<long>(v); })},
    };
    return table;
}

} // namespace

std::vector<BoundParams> BoundGrid::points() const
{
    std::vector<BoundParams> out{BoundParams{}};
    for (const auto &[key, values] : axes)
    {
        const auto &set = bound_keys().at(key);
        std::vector<BoundParams> next;
        for (const auto &p : out)
            for (double v : values)
            {
                BoundParams q = p;
                set(q, v);
                next.push_back(q);
            }
        out = std::move(next);
    }
    return out;
}

BoundGrid parse_bound_grid(std::istream &in)
{
    BoundGrid grid;
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!bound_keys().contains(key))
            throw ConfigError("unknown bound key '" + key + "'");
        auto values = parse_list<double>(key, trim(line.substr(eq + 1)));
        if (values.empty())
            throw ConfigError("no values for '" + key + "'");
        grid.axes[key] = std::move(values);
    }
    return grid;
}

BoundGrid load_bound_grid(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError(FormatErrc::io_error, "cannot open bound grid " + path.string());
    return parse_bound_grid(in);
}

} // namespace rmcart
