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

#include "rmcart/decoder.hpp"

#include "rmcart/adam.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

namespace rmcart {

using layers::Matrix;

// Architecture ------------------------------------------------------------

int DecoderArch::max_width() const
{
    return *std::max_element(channels.begin() + 1, channels.end() - 1);
}

DecoderArch DecoderArch::for_side(int side)
{
    DecoderArch arch;
    int blocks = 0;
    while ((arch.latent_side << blocks) < side && blocks < 20)
        ++blocks;
    if (blocks < 1 || (arch.latent_side << blocks) != side)
        throw std::invalid_argument("DecoderArch: no up-block count reaches side " + std::to_string(side));
    arch.channels.assign(static_cast<std::size_t>(blocks) + 2, 6);
    arch.channels.front() = arch.channels.back() = 1;
    return arch;
}

void DecoderArch::validate() const
{
    if (channels.size() < 3)
        throw std::invalid_argument("DecoderArch: need at least one up-block (k_0, k_1, k_2)");
    for (int k : channels)
        if (k <= 0)
            throw std::invalid_argument("DecoderArch: channel widths must be positive");
    if (kernel <= 0 || kernel % 2 == 0)
        throw std::invalid_argument("DecoderArch: kernel size must be odd and positive");
    if (latent_side <= 0)
        throw std::invalid_argument("DecoderArch: latent side must be positive");
    if (blocks() > 20 || output_side() <= 0)
        throw std::invalid_argument("DecoderArch: too many up-blocks");
    if (!(norm_epsilon > 0.0))
        throw std::invalid_argument("DecoderArch: norm epsilon must be positive");
}

std::vector<long> layer_param_counts(const DecoderArch &arch)
{
    arch.validate();
    std::vector<long> counts;
    const long n2 = static_cast<long>(arch.kernel) * arch.kernel;
    for (int b = 0; b < arch.blocks(); ++b)
        counts.push_back(arch.channels[b] * arch.channels[b + 1] * n2 + 2L * arch.channels[b + 1]);
    counts.push_back(static_cast<long>(arch.channels[arch.blocks()]) * arch.channels.back());
    return counts;
}

long count_params(const DecoderArch &arch)
{
    long total = 0;
    for (long c : layer_param_counts(arch))
        total += c;
    return total;
}

// Parameters ----------------------------------------------------------------

DecoderParams::DecoderParams(DecoderArch arch) : DecoderParams(arch, Eigen::VectorXd::Zero(count_params(arch)))
{
    for (int b = 0; b < arch_.blocks(); ++b)
        scale(b).setOnes();
}

DecoderParams::DecoderParams(DecoderArch arch, Eigen::VectorXd values) : arch_(std::move(arch)), values_(std::move(values))
{
    arch_.validate();
    Eigen::Index at = 0;
    const Eigen::Index n2 = static_cast<Eigen::Index>(arch_.kernel) * arch_.kernel;
    for (int b = 0; b < arch_.blocks(); ++b)
    {
        offsets_.kernel.push_back(at);
        at += arch_.channels[b] * n2 * arch_.channels[b + 1];
        offsets_.scale.push_back(at);
        at += arch_.channels[b + 1];
        offsets_.shift.push_back(at);
        at += arch_.channels[b + 1];
    }
    offsets_.output = at;
    at += static_cast<Eigen::Index>(arch_.channels[arch_.blocks()]) * arch_.channels.back();
    if (values_.size() != at)
        throw std::invalid_argument("DecoderParams: value count does not match the architecture");
}

Eigen::Map<const Eigen::MatrixXd> DecoderParams::kernel(int b) const
{
    const Eigen::Index n2 = static_cast<Eigen::Index>(arch_.kernel) * arch_.kernel;
    return {values_.data() + offsets_.kernel.at(b), arch_.channels[b] * n2, arch_.channels[b + 1]};
}
Eigen::Map<Eigen::MatrixXd> DecoderParams::kernel(int b)
{
    const Eigen::Index n2 = static_cast<Eigen::Index>(arch_.kernel) * arch_.kernel;
    return {values_.data() + offsets_.kernel.at(b), arch_.channels[b] * n2, arch_.channels[b + 1]};
}
Eigen::Map<const Eigen::VectorXd> DecoderParams::scale(int b) const
{
    return {values_.data() + offsets_.scale.at(b), arch_.channels[b + 1]};
}
Eigen::Map<Eigen::VectorXd> DecoderParams::scale(int b)
{
    return {values_.data() + offsets_.scale.at(b), arch_.channels[b + 1]};
}
Eigen::Map<const Eigen::VectorXd> DecoderParams::shift(int b) const
{
    return {values_.data() + offsets_.shift.at(b), arch_.channels[b + 1]};
}
Eigen::Map<Eigen::VectorXd> DecoderParams::shift(int b)
{
    return {values_.data() + offsets_.shift.at(b), arch_.channels[b + 1]};
}
Eigen::Map<const Eigen::MatrixXd> DecoderParams::output_kernel() const
{
    return {values_.data() + offsets_.output, arch_.channels[arch_.blocks()], arch_.channels.back()};
}
Eigen::Map<Eigen::MatrixXd> DecoderParams::output_kernel()
{
    return {values_.data() + offsets_.output, arch_.channels[arch_.blocks()], arch_.channels.back()};
}

Eigen::VectorXd DecoderParams::conv_weight_mask() const
{
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(values_.size());
    for (int b = 0; b < arch_.blocks(); ++b)
    {
        mask.segment(offsets_.scale[b], arch_.channels[b + 1]).setZero();
        mask.segment(offsets_.shift[b], arch_.channels[b + 1]).setZero();
    }
    return mask;
}

// Forward / reverse -------------------------------------------------------

Eigen::MatrixXd decode(const DecoderParams &theta, const Eigen::Ref<const Eigen::VectorXd> &z, DecoderTrace *trace)
{
    const auto &arch = theta.arch();
    if (z.size() != arch.latent_size())
        throw std::invalid_argument("decode: latent code length does not match the architecture");

    int side = arch.latent_side;
    Eigen::MatrixXd h = Eigen::Map<const Eigen::MatrixXd>(z.data(), side * side, arch.channels.front());
    if (trace)
        trace->blocks.assign(static_cast<std::size_t>(arch.blocks()), {});
    for (int b = 0; b < arch.blocks(); ++b)
    {
        Eigen::MatrixXd up = layers::upsample2x<double>(h, side);
        side *= 2;
        Eigen::MatrixXd patches = layers::im2col<double>(up, side, arch.kernel);
        Eigen::MatrixXd pre = patches * theta.kernel(b);
        Eigen::MatrixXd act = layers::relu(pre);
        layers::ChannelNormCache<double> *norm = trace ? &trace->blocks[b].norm : nullptr;
        h = layers::channel_norm<double>(act, theta.scale(b), theta.shift(b), arch.norm_epsilon, norm);
        if (trace)
        {
            trace->blocks[b].patches = std::move(patches);
            trace->blocks[b].pre_activation = std::move(pre);
        }
    }
    Eigen::MatrixXd out = layers::sigmoid(h * theta.output_kernel());
    if (trace)
    {
        trace->last_hidden = std::move(h);
        trace->output = out;
    }
    return out;
}

Eigen::VectorXd decode_adjoint(const DecoderParams &theta, const DecoderTrace &trace,
                               const Eigen::MatrixXd &grad_output, Eigen::Ref<Eigen::VectorXd> grad_theta)
{
    const auto &arch = theta.arch();
    if (grad_output.rows() != trace.output.rows() || grad_output.cols() != trace.output.cols())
        throw std::invalid_argument("decode_adjoint: gradient shape does not match the trace");
    if (grad_theta.size() != theta.values().size())
        throw std::invalid_argument("decode_adjoint: gradient vector has the wrong length");

    // Scratch parameter object sharing the layout, so gradient blocks can be addressed by name.
    DecoderParams grad(arch, Eigen::VectorXd::Zero(theta.values().size()));

    const Eigen::MatrixXd g_pre = layers::sigmoid_adjoint<double>(grad_output, trace.output);
    grad.output_kernel() = trace.last_hidden.transpose() * g_pre;
    Eigen::MatrixXd g = g_pre * theta.output_kernel().transpose();

    int side = arch.output_side();
    for (int b = arch.blocks() - 1; b >= 0; --b)
    {
        const auto &blk = trace.blocks[b];
        Eigen::MatrixXd g_act = layers::channel_norm_adjoint<double>(g, blk.norm, theta.scale(b), arch.norm_epsilon,
                                                                     grad.scale(b), grad.shift(b));
        Eigen::MatrixXd g_conv = layers::relu_adjoint<double>(g_act, blk.pre_activation);
        grad.kernel(b) = blk.patches.transpose() * g_conv;
        Eigen::MatrixXd g_patches = g_conv * theta.kernel(b).transpose();
        Eigen::MatrixXd g_up = layers::col2im<double>(g_patches, side, arch.channels[b], arch.kernel);
        side /= 2;
        g = layers::upsample2x_adjoint<double>(g_up, side);
    }
    grad_theta += grad.values();
    return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
}

SlfMatrix forward(const DecoderParams &theta, const Eigen::Ref<const Eigen::VectorXd> &z)
{
    if (theta.arch().output_channels() != 1)
        throw std::invalid_argument("forward: SLF decoder must have a single output channel");
    const Eigen::MatrixXd out = decode(theta, z);
    const int side = theta.arch().output_side();
    return Eigen::Map<const SlfMatrix>(out.data(), side, side);
}

Eigen::MatrixXd forward_slfs(const DecoderParams &theta, const LatentCodes &Z, std::vector<DecoderTrace> *traces)
{
    const auto &arch = theta.arch();
    if (arch.output_channels() != 1)
        throw std::invalid_argument("forward_slfs: SLF decoder must have a single output channel");
    if (Z.rows() != arch.latent_size())
        throw std::invalid_argument("forward_slfs: latent code length does not match the architecture");
    const Eigen::Index pixels = static_cast<Eigen::Index>(arch.output_side()) * arch.output_side();
    Eigen::MatrixXd S(pixels, Z.cols());
    if (traces)
        traces->assign(static_cast<std::size_t>(Z.cols()), {});
    for (Eigen::Index r = 0; r < Z.cols(); ++r)
        S.col(r) = decode(theta, Z.col(r), traces ? &(*traces)[r] : nullptr);
    return S;
}

RadioMapTensor forward_all(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C)
{
    if (Z.cols() != C.cols())
        throw std::invalid_argument("forward_all: Z and C must have one column per emitter");
    const int side = theta.arch().output_side();
    const Eigen::MatrixXd S = forward_slfs(theta, Z);
    return RadioMapTensor({side, side, static_cast<int>(C.rows())}, RowMatrixXd(S * C.transpose()));
}

Gradients backward_from_traces(const DecoderParams &theta, const Eigen::MatrixXd &slfs,
                               const std::vector<DecoderTrace> &traces, const PsdMatrix &C,
                               const Eigen::Ref<const RowMatrixXd> &cotangent)
{
    if (cotangent.rows() != slfs.rows() || cotangent.cols() != C.rows() || slfs.cols() != C.cols() ||
        static_cast<Eigen::Index>(traces.size()) != C.cols())
        throw std::invalid_argument("backward: shape mismatch");
    Gradients g;
    g.theta = Eigen::VectorXd::Zero(theta.values().size());
    g.Z.resize(theta.arch().latent_size(), C.cols());
    g.C = cotangent.transpose() * slfs;
    const Eigen::MatrixXd dS = cotangent * C;
    for (Eigen::Index r = 0; r < C.cols(); ++r)
        g.Z.col(r) = decode_adjoint(theta, traces[r], dS.col(r), g.theta);
    return g;
}

Gradients backward(const DecoderParams &theta, const LatentCodes &Z, const PsdMatrix &C,
                   const Eigen::Ref<const RowMatrixXd> &cotangent)
{
    if (Z.cols() != C.cols())
        throw std::invalid_argument("backward: Z and C must have one column per emitter");
    std::vector<DecoderTrace> traces;
    const Eigen::MatrixXd S = forward_slfs(theta, Z, &traces);
    return backward_from_traces(theta, S, traces, C, cotangent);
}

// Initialization ------------------------------------------------------------

InitScheme parse_init_scheme(const std::string &name)
{
    if (name == "uniform")
        return InitScheme::uniform;
    if (name == "xavier")
        return InitScheme::xavier;
    if (name == "warm-start-fit" || name == "warm_start_fit")
        return InitScheme::warm_start_fit;
    throw std::invalid_argument("unknown init scheme \"" + name + "\"");
}

std::string to_string(InitScheme scheme)
{
    switch (scheme)
    {
    case InitScheme::uniform: return "uniform";
    case InitScheme::xavier: return "xavier";
    case InitScheme::warm_start_fit: return "warm-start-fit";
    }
    return "unknown";
}

double slf_fit_loss(const DecoderParams &theta, const LatentCodes &Z, std::span<const SlfMatrix> targets, double floor)
{
    const Eigen::MatrixXd S = forward_slfs(theta, Z);
    double loss = 0.0;
    for (std::size_t r = 0; r < targets.size(); ++r)
    {
        const auto t = Eigen::Map<const Eigen::VectorXd>(targets[r].data(), targets[r].size());
        loss += ((S.col(static_cast<Eigen::Index>(r)).array() + floor).log() - (t.array() + floor).log())
                    .square()
                    .sum();
    }
    return loss;
}

double fit_slfs(DecoderParams &theta, LatentCodes &Z, std::span<const SlfMatrix> targets, const SlfFitOptions &options)
{
    const auto &arch = theta.arch();
    const Eigen::Index pixels = static_cast<Eigen::Index>(arch.output_side()) * arch.output_side();
    if (static_cast<Eigen::Index>(targets.size()) != Z.cols())
        throw std::invalid_argument("fit_slfs: need one target per latent code");
    for (const auto &t : targets)
        if (t.size() != pixels)
            throw std::invalid_argument("fit_slfs: target size does not match the decoder output");

    Eigen::MatrixXd log_targets(pixels, Z.cols());
    for (Eigen::Index r = 0; r < Z.cols(); ++r)
        log_targets.col(r) =
            (Eigen::Map<const Eigen::VectorXd>(targets[r].data(), pixels).array() + options.floor).log().matrix();

    Adam<Eigen::VectorXd> adam_theta(theta.values().size(), 1);
    Adam<Eigen::MatrixXd> adam_z(Z.rows(), Z.cols());
    std::vector<DecoderTrace> traces;
    for (int step = 0; step < options.steps; ++step)
    {
        const Eigen::MatrixXd S = forward_slfs(theta, Z, &traces);
        const Eigen::ArrayXXd diff = (S.array() + options.floor).log() - log_targets.array();
        const Eigen::MatrixXd dS = (2.0 * diff / (S.array() + options.floor)).matrix();
        Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(theta.values().size());
        Eigen::MatrixXd g_z(Z.rows(), Z.cols());
        for (Eigen::Index r = 0; r < Z.cols(); ++r)
            g_z.col(r) = decode_adjoint(theta, traces[r], dS.col(r), g_theta);
        adam_theta.step(theta.values(), g_theta, options.learning_rate);
        adam_z.step(Z, g_z, options.learning_rate);
    }
    return slf_fit_loss(theta, Z, targets, options.floor);
}

DecoderInit init_params(const DecoderArch &arch, InitScheme scheme, int R, Seed seed,
                        std::span<const SlfMatrix> targets, const SlfFitOptions &fit)
{
    arch.validate();
    if (R < 1)
        throw std::invalid_argument("init_params: R must be >= 1");
    DecoderInit init{DecoderParams(arch), LatentCodes(arch.latent_size(), R)};

    auto rng = seed.derive(11).engine();
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int n2 = arch.kernel * arch.kernel;
    for (int b = 0; b < arch.blocks(); ++b)
    {
        const double limit = scheme == InitScheme::uniform
                                 ? 1.0
                                 : std::sqrt(6.0 / ((arch.channels[b] + arch.channels[b + 1]) * n2));
        auto k = init.theta.kernel(b);
        for (Eigen::Index n = 0; n < k.size(); ++n)
            k.data()[n] = limit * unit(rng);
    }
    {
        const double limit = scheme == InitScheme::uniform
                                 ? 1.0
                                 : std::sqrt(6.0 / (arch.channels[arch.blocks()] + arch.channels.back()));
        auto k = init.theta.output_kernel();
        for (Eigen::Index n = 0; n < k.size(); ++n)
            k.data()[n] = limit * unit(rng);
    }
    auto zrng = seed.derive(12).engine();
    for (Eigen::Index n = 0; n < init.Z.size(); ++n)
        init.Z.data()[n] = unit(zrng);

    if (scheme == InitScheme::warm_start_fit)
    {
        if (static_cast<int>(targets.size()) != R)
            throw std::invalid_argument("init_params: warm-start-fit needs one target SLF per emitter");
        fit_slfs(init.theta, init.Z, targets, fit);
    }
    return init;
}

// Serialization -------------------------------------------------------------

void params_write(const std::filesystem::path &path, const DecoderParams &theta)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string() + " for writing");
    const auto &arch = theta.arch();
    out << "UNN1 " << arch.blocks();
    for (int k : arch.channels)
        out << ' ' << k;
    out << ' ' << arch.kernel << ' ' << arch.latent_side << '\n';
    for (Eigen::Index n = 0; n < theta.values().size(); ++n)
    {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(theta.values()(n));
        if constexpr (std::endian::native == std::endian::big)
            bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char *>(&bits), 8);
    }
    if (!out)
        throw FormatError(FormatErrc::io_error, "write failed for " + path.string());
}

DecoderParams params_read(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header))
        throw FormatError(FormatErrc::malformed_header, "missing header line");
    std::istringstream hs(header);
    std::string magic;
    int L = 0;
    if (!(hs >> magic >> L) || magic != "UNN1" || L < 1 || L > 20)
        throw FormatError(FormatErrc::malformed_header, header);
    DecoderArch arch;
    arch.channels.assign(static_cast<std::size_t>(L) + 2, 0);
    for (int &k : arch.channels)
        if (!(hs >> k))
            throw FormatError(FormatErrc::malformed_header, header);
    std::string extra;
    if (!(hs >> arch.kernel >> arch.latent_side) || (hs >> extra))
        throw FormatError(FormatErrc::malformed_header, header);
    try
    {
        arch.validate();
    }
    catch (const std::invalid_argument &e)
    {
        throw FormatError(FormatErrc::malformed_header, e.what());
    }
    const auto count = count_params(arch);
    Eigen::VectorXd values(count);
    for (long n = 0; n < count; ++n)
    {
        std::uint64_t bits = 0;
        if (!in.read(reinterpret_cast<char *>(&bits), 8))
            throw FormatError(FormatErrc::truncated_payload, "expected " + std::to_string(count) + " parameters");
        if constexpr (std::endian::native == std::endian::big)
            bits = __builtin_bswap64(bits);
        values(n) = std::bit_cast<double>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError(FormatErrc::trailing_data, "bytes after the payload");
    return DecoderParams(std::move(arch), std::move(values));
}

} // namespace rmcart
