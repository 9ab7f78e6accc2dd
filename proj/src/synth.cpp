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

#include "rmcart/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <tuple>

namespace rmcart {

// Shadowing ---------------------------------------------------------------

ShadowingSampler::ShadowingSampler(int I, int J, double Xc) : I_(I), J_(J)
{
    if (I <= 0 || J <= 0)
        throw std::invalid_argument("ShadowingSampler: grid dimensions must be positive");
    if (!(Xc > 0.0))
        throw std::invalid_argument("ShadowingSampler: decorrelation distance must be positive");

    const Eigen::Index n = static_cast<Eigen::Index>(I) * J;
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q <= p; ++q)
        {
            const double di = static_cast<double>(p / J - q / J);
            const double dj = static_cast<double>(p % J - q % J);
            cov(p, q) = std::exp(-std::sqrt(di * di + dj * dj) / Xc);
        }

    // The exponential kernel is positive definite; jitter only covers round-off
    // when Xc is very large compared to the grid.
    double jitter = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt)
    {
        Eigen::MatrixXd work = cov;
        work.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(work.selfadjointView<Eigen::Lower>());
        if (llt.info() == Eigen::Success)
        {
            lower_ = llt.matrixL();
            return;
        }
        jitter = jitter == 0.0 ? 1e-12 : jitter * 100.0;
    }
    throw std::runtime_error("ShadowingSampler: covariance factorization failed");
}

std::shared_ptr<const ShadowingSampler> ShadowingSampler::shared(int I, int J, double Xc)
{
    static std::mutex mutex;
    static std::map<std::tuple<int, int, double>, std::shared_ptr<const ShadowingSampler>> cache;
    const std::lock_guard lock(mutex);
    auto &slot = cache[{I, J, Xc}];
    if (!slot)
        slot = std::make_shared<const ShadowingSampler>(I, J, Xc);
    return slot;
}

RowMatrixXd ShadowingSampler::sample(double eta, Seed seed) const
{
    if (!(eta >= 0.0))
        throw std::invalid_argument("ShadowingSampler::sample: eta must be >= 0");
    const Eigen::Index n = lower_.rows();
    Eigen::VectorXd w(n);
    auto rng = seed.engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index p = 0; p < n; ++p)
        w(p) = normal(rng);
    Eigen::VectorXd field = lower_.triangularView<Eigen::Lower>() * w;
    field *= eta;
    return Eigen::Map<RowMatrixXd>(field.data(), I_, J_);
}

RowMatrixXd shadowing_field(int I, int J, const ShadowingParams &params, Seed seed)
{
    if (!(params.Xc > 0.0))
        throw std::invalid_argument("shadowing_field: Xc must be positive");
    if (!(params.eta >= 0.0))
        throw std::invalid_argument("shadowing_field: eta must be >= 0");
    if (params.eta == 0.0)
    {
        if (I <= 0 || J <= 0)
            throw std::invalid_argument("shadowing_field: grid dimensions must be positive");
        return RowMatrixXd::Zero(I, J);
    }
    return ShadowingSampler::shared(I, J, params.Xc)->sample(params.eta, seed);
}

SlfMatrix generate_slf(int I, int J, const ShadowingParams &params, Seed seed)
{
    if (I <= 0 || J <= 0)
        throw std::invalid_argument("generate_slf: grid dimensions must be positive");
    if (params.emitter.i < 0 || params.emitter.i >= I || params.emitter.j < 0 || params.emitter.j >= J)
        throw std::invalid_argument("generate_slf: emitter outside the grid");
    if (!(params.path_loss_exponent > 0.0))
        throw std::invalid_argument("generate_slf: path loss exponent must be positive");

    const RowMatrixXd shadow = shadowing_field(I, J, params, seed);
    SlfMatrix S(I, J);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
        {
            const double di = i - params.emitter.i;
            const double dj = j - params.emitter.j;
            const double d = std::max(1.0, std::sqrt(di * di + dj * dj));
            const double gain = std::pow(d, -params.path_loss_exponent) * std::pow(10.0, shadow(i, j) / 10.0);
            S(i, j) = std::min(1.0, gain);
        }
    return S;
}

// Spectra -----------------------------------------------------------------

Eigen::VectorXd generate_psd(int K, const PsdSpec &spec)
{
    if (K <= 0)
        throw std::invalid_argument("generate_psd: K must be positive");
    if (spec.components.empty())
        throw std::invalid_argument("generate_psd: at least one component is required");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(K);
    for (const auto &bump : spec.components)
    {
        if (!(bump.amplitude > 0.0) || !(bump.width > 0.0))
            throw std::invalid_argument("generate_psd: amplitude and width must be positive");
        for (int k = 0; k < K; ++k)
        {
            const double u = (k - bump.center) / bump.width;
            c(k) += bump.amplitude * std::exp(-0.5 * u * u);
        }
    }
    return c;
}

PsdSpec random_psd_spec(int K, const PsdRanges &ranges, Seed seed)
{
    if (ranges.bumps_min < 1 || ranges.bumps_max < ranges.bumps_min)
        throw std::invalid_argument("random_psd_spec: invalid bump count range");
    auto rng = seed.engine();
    std::uniform_int_distribution<int> count(ranges.bumps_min, ranges.bumps_max);
    std::uniform_real_distribution<double> amp(ranges.amp_min, ranges.amp_max);
    std::uniform_real_distribution<double> center(0.0, static_cast<double>(K));
    std::uniform_real_distribution<double> width(ranges.width_min, ranges.width_max);
    PsdSpec spec;
    const int m = count(rng);
    for (int n = 0; n < m; ++n)
    {
        GaussianBump b;
        b.amplitude = amp(rng);
        b.center = center(rng);
        b.width = width(rng);
        spec.components.push_back(b);
    }
    return spec;
}

// Assembly ----------------------------------------------------------------

RadioMapTensor assemble_map(Dims3 dims, const Eigen::Ref<const Eigen::MatrixXd> &slf_columns, const PsdMatrix &C)
{
    if (slf_columns.rows() != static_cast<Eigen::Index>(dims.I) * dims.J || C.rows() != dims.K ||
        slf_columns.cols() != C.cols())
        throw std::invalid_argument("assemble_map: dimension mismatch");
    if ((C.array() < 0.0).any())
        throw std::invalid_argument("assemble_map: PSD entries must be >= 0");
    const RowMatrixXd unfolded = slf_columns * C.transpose();
    return RadioMapTensor(dims, unfolded);
}

RadioMapTensor assemble_map(std::span<const SlfMatrix> slfs, const PsdMatrix &C)
{
    if (slfs.empty() || static_cast<Eigen::Index>(slfs.size()) != C.cols())
        throw std::invalid_argument("assemble_map: need one SLF per PSD column");
    const auto I = slfs.front().rows();
    const auto J = slfs.front().cols();
    Eigen::MatrixXd columns(I * J, C.cols());
    for (std::size_t r = 0; r < slfs.size(); ++r)
    {
        if (slfs[r].rows() != I || slfs[r].cols() != J)
            throw std::invalid_argument("assemble_map: SLF dimension mismatch");
        columns.col(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::VectorXd>(slfs[r].data(), I * J);
    }
    return assemble_map({static_cast<int>(I), static_cast<int>(J), static_cast<int>(C.rows())}, columns, C);
}

// Quantizer ---------------------------------------------------------------

void QuantizerSpec::validate() const
{
    if (B < 1 || B > 16)
        throw std::invalid_argument("QuantizerSpec: bit depth must lie in [1, 16]");
    if (static_cast<int>(bins.size()) != levels() + 1)
        throw std::invalid_argument("QuantizerSpec: need 2^B + 1 bin boundaries");
    if (bins.front() != -std::numeric_limits<double>::infinity() ||
        bins.back() != std::numeric_limits<double>::infinity())
        throw std::invalid_argument("QuantizerSpec: outer boundaries must be -inf and +inf");
    for (std::size_t l = 1; l < bins.size(); ++l)
        if (!(bins[l] > bins[l - 1]))
            throw std::invalid_argument("QuantizerSpec: boundaries must be strictly increasing");
    if (!(sigma > 0.0) || !(a_offset > 0.0))
        throw std::invalid_argument("QuantizerSpec: sigma and a_offset must be positive");
}

int QuantizerSpec::label(double x) const
{
    // First boundary b_l with x <= b_l gives label l.
    const auto it = std::lower_bound(bins.begin() + 1, bins.end(), x);
    return static_cast<int>(it - bins.begin());
}

QuantizerSpec design_quantizer(const Eigen::Ref<const Eigen::MatrixXd> &h_values, int B, double sigma,
                               double a_offset)
{
    if (h_values.size() == 0)
        throw std::invalid_argument("design_quantizer: no values");
    const double mean = h_values.mean();
    const double var = (h_values.array() - mean).square().mean();
    const double spread = std::max(std::sqrt(var), 1e-6);
    const double lo = mean - 3.0 * spread;
    const double hi = mean + 3.0 * spread;

    QuantizerSpec spec;
    spec.B = B;
    spec.sigma = sigma;
    spec.a_offset = a_offset;
    const int L = spec.levels();
    spec.bins.assign(static_cast<std::size_t>(L) + 1, 0.0);
    spec.bins.front() = -std::numeric_limits<double>::infinity();
    spec.bins.back() = std::numeric_limits<double>::infinity();
    if (L == 2)
        spec.bins[1] = mean;
    else
        for (int l = 1; l < L; ++l)
            spec.bins[l] = lo + (hi - lo) * static_cast<double>(l - 1) / static_cast<double>(L - 2);
    spec.validate();
    return spec;
}

RowMatrixXi quantize_fibers(const Measurements &measurements, const QuantizerSpec &spec, Seed seed)
{
    spec.validate();
    const auto &Y = measurements.fibers;
    RowMatrixXi labels(Y.rows(), Y.cols());
    auto rng = seed.engine();
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (Eigen::Index s = 0; s < Y.rows(); ++s)
        for (Eigen::Index k = 0; k < Y.cols(); ++k)
            labels(s, k) = spec.label(h_transform(Y(s, k), spec.a_offset) + noise(rng));
    return labels;
}

// Scenarios ---------------------------------------------------------------

Scenario generate_scenario(const ScenarioParams &params, Seed seed)
{
    if (params.I <= 0 || params.J <= 0 || params.K <= 0 || params.R <= 0)
        throw std::invalid_argument("generate_scenario: dimensions and R must be positive");
    if (params.R > params.I * params.J)
        throw std::invalid_argument("generate_scenario: more emitters than grid cells");

    Scenario out;
    auto rng = seed.derive(1).engine();
    std::uniform_int_distribution<int> cell(0, params.I * params.J - 1);
    std::set<int> used;
    while (static_cast<int>(out.emitters.size()) < params.R)
    {
        const int c = cell(rng);
        if (used.insert(c).second)
            out.emitters.push_back({c / params.J, c % params.J});
    }

    out.C.resize(params.K, params.R);
    for (int r = 0; r < params.R; ++r)
    {
        ShadowingParams sp;
        sp.Xc = params.Xc;
        sp.eta = params.eta;
        sp.path_loss_exponent = params.path_loss_exponent;
        sp.emitter = out.emitters[r];
        out.slfs.push_back(generate_slf(params.I, params.J, sp, seed.derive(100 + r)));
        out.C.col(r) = generate_psd(params.K, random_psd_spec(params.K, params.psd, seed.derive(200 + r)));
    }
    out.X = assemble_map(out.slfs, out.C);
    return out;
}

} // namespace rmcart
