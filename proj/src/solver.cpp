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

#include "rmcart/solver.hpp"

#include "rmcart/baselines.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace rmcart {

// Observations ----------------------------------------------------------------

Eigen::MatrixXd linear_proxy(const Observations &obs)
{
    return std::visit(
        [](const auto &o) -> Eigen::MatrixXd {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, FpObservations>)
                return h_inverse(o.y.array(), o.a_offset).matrix();
            else
            {
                o.spec.validate();
                const auto &b = o.spec.bins;
                const int L = o.spec.levels();
                // Representative h-value per label; the open outer bins use the
                // adjacent boundary pushed out by half an interior cell.
                std::vector<double> rep(L + 1);
                const double half = L > 2 ? 0.5 * (b[L - 1] - b[1]) / (L - 2) : o.spec.sigma;
                for (int q = 1; q <= L; ++q)
                {
                    if (q == 1)
                        rep[q] = b[1] - half;
                    else if (q == L)
                        rep[q] = b[L - 1] + half;
                    else
                        rep[q] = 0.5 * (b[q - 1] + b[q]);
                }
                Eigen::MatrixXd out(o.labels.rows(), o.labels.cols());
                for (Eigen::Index s = 0; s < out.rows(); ++s)
                    for (Eigen::Index k = 0; k < out.cols(); ++k)
                    {
                        const int q = o.labels(s, k);
                        if (q < 1 || q > L)
                            throw std::invalid_argument("linear_proxy: label outside [1, L]");
                        out(s, k) = h_inverse(rep[q], o.spec.a_offset);
                    }
                return out;
            }
        },
        obs);
}

double transform_offset(const Observations &obs)
{
    return std::visit(
        [](const auto &o) {
            if constexpr (std::is_same_v<std::decay_t<decltype(o)>, FpObservations>)
                return o.a_offset;
            else
                return o.spec.a_offset;
        },
        obs);
}

std::string loss_kind(const Observations &obs)
{
    return std::holds_alternative<FpObservations>(obs) ? "fp" : "quantized";
}

static Eigen::Index observation_bands(const Observations &obs)
{
    return std::visit(
        [](const auto &o) -> Eigen::Index {
            if constexpr (std::is_same_v<std::decay_t<decltype(o)>, FpObservations>)
                return o.y.cols();
            else
                return o.labels.cols();
        },
        obs);
}

// Configuration ---------------------------------------------------------------

WarmStart parse_warm_start(const std::string &name)
{
    if (name == "btd")
        return WarmStart::btd;
    if (name == "interpolation" || name == "idw")
        return WarmStart::interpolation;
    if (name == "uniform")
        return WarmStart::uniform;
    if (name == "xavier")
        return WarmStart::xavier;
    throw std::invalid_argument("unknown warm start '" + name + "'");
}

std::string to_string(WarmStart w)
{
    switch (w)
    {
    case WarmStart::btd:
        return "btd";
    case WarmStart::interpolation:
        return "interpolation";
    case WarmStart::uniform:
        return "uniform";
    case WarmStart::xavier:
        return "xavier";
    }
    return "?";
}

void SolverConfig::validate() const
{
    if (!(decoder_step > 0.0) || !(psd_step > 0.0))
        throw std::invalid_argument("SolverConfig: step sizes must be positive");
    if (!(tol > 0.0))
        throw std::invalid_argument("SolverConfig: tol must be positive");
    if (max_iter < 1)
        throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (fit_steps < 0)
        throw std::invalid_argument("SolverConfig: fit_steps must be >= 0");
    reg.validate();
}

// Initialization --------------------------------------------------------------

NonnegativeFactors nonnegative_split(const RadioMapTensor &X, int R, Seed seed, int sweeps)
{
    if (R < 1)
        throw std::invalid_argument("nonnegative_split: R must be >= 1");
    const auto V = X.unfolded();
    for (Eigen::Index n = 0; n < V.size(); ++n)
        if (!std::isfinite(V.data()[n]))
            throw std::invalid_argument("nonnegative_split: non-finite reference tensor");

    auto rng = seed.engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    NonnegativeFactors f;
    f.slfs.resize(V.rows(), R);
    f.psds.resize(V.cols(), R);
    for (Eigen::Index n = 0; n < f.slfs.size(); ++n)
        f.slfs.data()[n] = unit(rng);
    for (Eigen::Index n = 0; n < f.psds.size(); ++n)
        f.psds.data()[n] = unit(rng);

    constexpr double tiny = 1e-12;
    for (int sweep = 0; sweep < sweeps; ++sweep)
    {
        {
            const Eigen::MatrixXd gram = f.slfs.transpose() * f.slfs;
            const Eigen::MatrixXd proj = V.transpose() * f.slfs;
            for (int r = 0; r < R; ++r)
                f.psds.col(r) = (f.psds.col(r) + (proj.col(r) - f.psds * gram.col(r)) / std::max(gram(r, r), tiny))
                                    .cwiseMax(0.0);
        }
        {
            const Eigen::MatrixXd gram = f.psds.transpose() * f.psds;
            const Eigen::MatrixXd proj = V * f.psds;
            for (int r = 0; r < R; ++r)
                f.slfs.col(r) = (f.slfs.col(r) + (proj.col(r) - f.slfs * gram.col(r)) / std::max(gram(r, r), tiny))
                                    .cwiseMax(0.0);
        }
    }
    for (int r = 0; r < R; ++r)
    {
        const double peak = f.slfs.col(r).maxCoeff();
        if (peak > 0.0)
        {
            f.slfs.col(r) /= peak;
            f.psds.col(r) *= peak;
        }
    }
    return f;
}

FactoredState init_from_reference(const RadioMapTensor &X_ref, int R, const DecoderArch &arch, Seed seed,
                                  int fit_steps)
{
    arch.validate();
    if (X_ref.I() != arch.output_side() || X_ref.J() != arch.output_side())
        throw std::invalid_argument("init_from_reference: reference grid does not match the decoder output");
    const NonnegativeFactors split = nonnegative_split(X_ref, R, seed.derive(31));

    std::vector<SlfMatrix> targets;
    for (int r = 0; r < R; ++r)
        targets.emplace_back(Eigen::Map<const RowMatrixXd>(split.slfs.col(r).data(), X_ref.I(), X_ref.J()));
    SlfFitOptions fit;
    fit.steps = fit_steps;
    DecoderInit init = init_params(arch, InitScheme::warm_start_fit, R, seed.derive(32), targets, fit);

    FactoredState state{std::move(init.theta), std::move(init.Z), PsdMatrix(X_ref.K(), R)};
    auto rng = seed.derive(33).engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index n = 0; n < state.C.size(); ++n)
        state.C.data()[n] = unit(rng);

    state.C = split.psds;
    const Eigen::MatrixXd S = forward_slfs(state.theta, state.Z);
    const double model_energy = (S * state.C.transpose()).norm();
    const double ref_energy = X_ref.unfolded().norm();
    if (model_energy > 0.0)
        state.C *= ref_energy / model_energy;
    return state;
}

// Recovery --------------------------------------------------------------------

LossResult evaluate_loss(const FactoredState &state, const Observations &obs, const SamplingMask &mask,
                         const RegWeights &reg)
{
    return std::visit(
        [&](const auto &o) {
            if constexpr (std::is_same_v<std::decay_t<decltype(o)>, FpObservations>)
                return fp_loss(state.theta, state.Z, state.C, o.y, mask, o.a_offset, reg);
            else
                return quant_nll(state.theta, state.Z, state.C, o.labels, mask, o.spec, reg);
        },
        obs);
}

static FactoredState warm_start(const Observations &obs, const SamplingMask &mask, const DecoderArch &arch, int R,
                                const SolverConfig &config, Seed seed)
{
    const Dims3 dims{mask.I(), mask.J(), static_cast<int>(observation_bands(obs))};
    switch (config.init)
    {
    case WarmStart::btd:
    case WarmStart::interpolation: {
        const Measurements linear{mask, linear_proxy(obs)};
        RadioMapTensor reference;
        if (config.init == WarmStart::btd)
        {
            BtdConfig btd;
            btd.seed = seed.derive(21);
            reference = btd_recover(linear, dims, R, btd);
        }
        else
            reference = idw_interpolate(linear, dims, 2.0, transform_offset(obs));
        return init_from_reference(reference, R, arch, seed.derive(22), config.fit_steps);
    }
    case WarmStart::uniform:
    case WarmStart::xavier: {
        const auto scheme = config.init == WarmStart::uniform ? InitScheme::uniform : InitScheme::xavier;
        DecoderInit init = init_params(arch, scheme, R, seed.derive(23));
        FactoredState state{std::move(init.theta), std::move(init.Z), PsdMatrix(dims.K, R)};
        auto rng = seed.derive(24).engine();
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (Eigen::Index n = 0; n < state.C.size(); ++n)
            state.C.data()[n] = unit(rng);
        return state;
    }
    }
    throw std::invalid_argument("unknown warm start");
}

RecoveryResult recover(const Observations &obs, const SamplingMask &mask, const DecoderArch &arch, int R,
                       const SolverConfig &config, Seed seed, std::optional<FactoredState> initial)
{
    config.validate();
    arch.validate();
    if (R < 1)
        throw std::invalid_argument("recover: R must be >= 1");
    if (arch.output_channels() != 1)
        throw std::invalid_argument("recover: the factored model needs a single-channel decoder");
    if (mask.I() != arch.output_side() || mask.J() != arch.output_side())
        throw std::invalid_argument("recover: mask grid does not match the decoder output");

    FactoredState state = initial ? std::move(*initial) : warm_start(obs, mask, arch, R, config, seed);
    if (state.Z.cols() != R || state.C.cols() != R || state.Z.rows() != arch.latent_size() ||
        state.C.rows() != observation_bands(obs) || !(state.theta.arch() == arch))
        throw std::invalid_argument("recover: initial state does not match arch, R or K");
    state.C = state.C.cwiseMax(0.0);

    RecoveryResult out;
    out.loss_kind = loss_kind(obs);
    LossResult current = evaluate_loss(state, obs, mask, config.reg);
    if (!std::isfinite(current.value))
        throw DivergedError("recover: non-finite loss at the initial point", state, out.trace);
    out.trace.push_back(current.value);

    Adam<Eigen::MatrixXd> adam_c(state.C.rows(), state.C.cols(), config.adam);
    Adam<Eigen::MatrixXd> adam_z(state.Z.rows(), state.Z.cols(), config.adam);
    Adam<Eigen::VectorXd> adam_theta(state.theta.values().size(), 1, config.adam);
    for (int it = 0; it < config.max_iter; ++it)
    {
        FactoredState previous = state;
        adam_c.step(state.C, current.grad.C, config.psd_step);
        state.C = state.C.cwiseMax(0.0);
        adam_z.step(state.Z, current.grad.Z, config.decoder_step);
        adam_theta.step(state.theta.values(), current.grad.theta, config.decoder_step);

        LossResult next = evaluate_loss(state, obs, mask, config.reg);
        if (!std::isfinite(next.value))
            throw DivergedError("recover: loss became non-finite at iteration " + std::to_string(it + 1),
                                std::move(previous), out.trace);
        out.trace.push_back(next.value);
        const double change = std::abs(next.value - current.value) / std::max(1.0, std::abs(current.value));
        current = std::move(next);
        if (change < config.tol)
        {
            out.converged = true;
            break;
        }
    }

    out.estimate = forward_all(state.theta, state.Z, state.C);
    out.state = std::move(state);
    return out;
}

void trace_write(const std::filesystem::path &path, const std::vector<double> &trace)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string() + " for writing");
    out << "iter,loss\n" << std::setprecision(17);
    for (std::size_t k = 0; k < trace.size(); ++k)
        out << k << ',' << trace[k] << '\n';
    if (!out)
        throw FormatError(FormatErrc::io_error, "write failed for " + path.string());
}

} // namespace rmcart
