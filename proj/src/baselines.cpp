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

#include "rmcart/baselines.hpp"

#include <cmath>

namespace rmcart {

// Inverse-distance weighting --------------------------------------------------

RadioMapTensor idw_interpolate(const Measurements &measurements, Dims3 dims, double power_p, double a_offset)
{
    const auto &mask = measurements.mask;
    if (mask.count() == 0)
        throw std::invalid_argument("idw_interpolate: empty mask");
    if (mask.I() != dims.I || mask.J() != dims.J || measurements.fibers.cols() != dims.K)
        throw std::invalid_argument("idw_interpolate: measurements do not match dims");
    if (!(power_p > 0.0) || !(a_offset > 0.0))
        throw std::invalid_argument("idw_interpolate: power and a_offset must be positive");

    const Eigen::MatrixXd y = (measurements.fibers.array() + a_offset).log().matrix();
    const auto N = static_cast<Eigen::Index>(mask.count());
    const Eigen::Index cells = static_cast<Eigen::Index>(dims.I) * dims.J;
    Eigen::MatrixXd W(cells, N);
    for (int i = 0; i < dims.I; ++i)
        for (int j = 0; j < dims.J; ++j)
        {
            const Eigen::Index p = static_cast<Eigen::Index>(i) * dims.J + j;
            for (Eigen::Index s = 0; s < N; ++s)
            {
                const double di = i - mask.cells()[s].i;
                const double dj = j - mask.cells()[s].j;
                W(p, s) = std::pow(di * di + dj * dj, -0.5 * power_p);
            }
        }
    RowMatrixXd estimate = W * y;
    estimate.array().colwise() /= W.rowwise().sum().array();
    // Cells holding a sensor get its reading exactly (their weight is infinite).
    const auto rows = mask.rows();
    for (Eigen::Index s = 0; s < N; ++s)
        estimate.row(rows[s]) = y.row(s);
    estimate = h_inverse(estimate.array(), a_offset).matrix();
    return RadioMapTensor(dims, estimate);
}

// Block-term decomposition ----------------------------------------------------

void BtdConfig::validate() const
{
    if (rank_L < 1)
        throw std::invalid_argument("BtdConfig: rank_L must be >= 1");
    if (iters < 1)
        throw std::invalid_argument("BtdConfig: iters must be >= 1");
    if (!(damping >= 0.0) || !(tol >= 0.0))
        throw std::invalid_argument("BtdConfig: damping and tol must be >= 0");
}

namespace {

struct BtdProblem
{
    const Eigen::MatrixXd &X;                 // N x K observed fibers
    std::vector<int> row_of, col_of;          // per observation
    int I, J, R, L;
    double damping;
};

/// S_obs(s, r) = A_r(i_s, :) . B_r(j_s, :)
Eigen::MatrixXd observed_slfs(const BtdProblem &p, const std::vector<Eigen::MatrixXd> &A,
                              const std::vector<Eigen::MatrixXd> &B)
{
    const auto N = static_cast<Eigen::Index>(p.row_of.size());
    Eigen::MatrixXd S(N, p.R);
    for (Eigen::Index s = 0; s < N; ++s)
        for (int r = 0; r < p.R; ++r)
            S(s, r) = A[r].row(p.row_of[s]).dot(B[r].row(p.col_of[s]));
    return S;
}

double damped_objective(const BtdProblem &p, const std::vector<Eigen::MatrixXd> &A,
                        const std::vector<Eigen::MatrixXd> &B, const PsdMatrix &C)
{
    const Eigen::MatrixXd S = observed_slfs(p, A, B);
    double penalty = C.squaredNorm();
    for (int r = 0; r < p.R; ++r)
        penalty += A[r].squaredNorm() + B[r].squaredNorm();
    return (p.X - S * C.transpose()).squaredNorm() + p.damping * penalty;
}

/// Exact joint update of all emitters' factor rows for one spatial mode.
/// `own` holds the factor being solved (A when solving rows), `other` the fixed one.
void update_mode(const BtdProblem &p, std::vector<Eigen::MatrixXd> &own, const std::vector<Eigen::MatrixXd> &other,
                 const std::vector<int> &own_index, const std::vector<int> &other_index, const PsdMatrix &C)
{
    const int RL = p.R * p.L;
    const Eigen::MatrixXd gram = C.transpose() * C;   // R x R
    const Eigen::MatrixXd proj = p.X * C;             // N x R
    const int extent = static_cast<int>(own.front().rows());
    std::vector<Eigen::MatrixXd> G(extent, Eigen::MatrixXd::Zero(RL, RL));
    std::vector<Eigen::VectorXd> rhs(extent, Eigen::VectorXd::Zero(RL));

    Eigen::VectorXd beta(RL);
    for (std::size_t s = 0; s < own_index.size(); ++s)
    {
        const int u = own_index[s];
        for (int r = 0; r < p.R; ++r)
            beta.segment(r * p.L, p.L) = other[r].row(other_index[s]).transpose();
        for (int r = 0; r < p.R; ++r)
        {
            rhs[u].segment(r * p.L, p.L) += proj(static_cast<Eigen::Index>(s), r) * beta.segment(r * p.L, p.L);
            for (int q = 0; q < p.R; ++q)
                G[u].block(r * p.L, q * p.L, p.L, p.L).noalias() +=
                    gram(r, q) * beta.segment(r * p.L, p.L) * beta.segment(q * p.L, p.L).transpose();
        }
    }
    for (int u = 0; u < extent; ++u)
    {
        G[u].diagonal().array() += p.damping;
        Eigen::VectorXd sol;
        if (G[u].diagonal().maxCoeff() <= p.damping)
            sol = Eigen::VectorXd::Zero(RL);
        else
            sol = G[u].ldlt().solve(rhs[u]);
        for (int r = 0; r < p.R; ++r)
            own[r].row(u) = sol.segment(r * p.L, p.L).transpose();
    }
}

/// One exact nonnegative coordinate sweep over the PSD columns.
void update_psds(const BtdProblem &p, const Eigen::MatrixXd &S, PsdMatrix &C)
{
    const Eigen::MatrixXd gram = S.transpose() * S;
    const Eigen::MatrixXd proj = p.X.transpose() * S;   // K x R
    for (int r = 0; r < p.R; ++r)
    {
        Eigen::VectorXd num = proj.col(r) - C * gram.col(r) + C.col(r) * gram(r, r);
        C.col(r) = (num / (gram(r, r) + p.damping)).cwiseMax(0.0);
    }
}

} // namespace

BtdResult btd_fit(const Measurements &measurements, Dims3 dims, int R, const BtdConfig &config)
{
    config.validate();
    const auto &mask = measurements.mask;
    if (R < 1)
        throw std::invalid_argument("btd_fit: R must be >= 1");
    if (mask.I() != dims.I || mask.J() != dims.J || measurements.fibers.cols() != dims.K)
        throw std::invalid_argument("btd_fit: measurements do not match dims");
    if (config.rank_L > std::min(dims.I, dims.J))
        throw std::invalid_argument("btd_fit: rank_L exceeds min(I, J)");

    BtdProblem p{measurements.fibers, {}, {}, dims.I, dims.J, R, config.rank_L, config.damping};
    for (const auto &c : mask.cells())
    {
        p.row_of.push_back(c.i);
        p.col_of.push_back(c.j);
    }

    BtdResult out;
    auto rng = config.seed.engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd M(rows, cols);
        for (Eigen::Index n = 0; n < M.size(); ++n)
            M.data()[n] = unit(rng);
        return M;
    };
    for (int r = 0; r < R; ++r)
    {
        out.A.push_back(draw(dims.I, config.rank_L));
        out.B.push_back(draw(dims.J, config.rank_L));
    }
    out.C = draw(dims.K, R);

    double previous = damped_objective(p, out.A, out.B, out.C);
    out.block_objective.push_back(previous);
    for (int it = 0; it < config.iters; ++it)
    {
        update_mode(p, out.A, out.B, p.row_of, p.col_of, out.C);
        out.block_objective.push_back(damped_objective(p, out.A, out.B, out.C));
        update_mode(p, out.B, out.A, p.col_of, p.row_of, out.C);
        out.block_objective.push_back(damped_objective(p, out.A, out.B, out.C));
        update_psds(p, observed_slfs(p, out.A, out.B), out.C);
        const double current = damped_objective(p, out.A, out.B, out.C);
        out.block_objective.push_back(current);
        out.objective.push_back(current);
        if (std::abs(previous - current) <= config.tol * std::max(previous, 1e-300))
            break;
        previous = current;
    }

    Eigen::MatrixXd slfs(static_cast<Eigen::Index>(dims.I) * dims.J, R);
    for (int r = 0; r < R; ++r)
    {
        const RowMatrixXd S = out.A[r] * out.B[r].transpose();
        slfs.col(r) = Eigen::Map<const Eigen::VectorXd>(S.data(), S.size());
    }
    const RowMatrixXd X = (slfs * out.C.transpose()).cwiseMax(0.0);
    out.estimate = RadioMapTensor(dims, X);
    return out;
}

RadioMapTensor btd_recover(const Measurements &measurements, Dims3 dims, int R, const BtdConfig &config)
{
    return btd_fit(measurements, dims, R, config).estimate;
}

// Naive deep decoder ----------------------------------------------------------

NaiveSizing naive_sizing(int K, int R, int side)
{
    if (K < 1 || R < 1)
        throw std::invalid_argument("naive_sizing: K and R must be positive");
    const int latent_side = 4;
    int blocks = 0;
    while ((latent_side << blocks) < side)
        ++blocks;
    if ((latent_side << blocks) != side || blocks < 1)
        throw std::invalid_argument("naive_sizing: output side must be 4 * 2^n with n >= 1");

    const long budget = 1080L + 16L * R;
    // Greedy over the hidden width from 6 down; for each width the latent channel
    // count closest to the budget is taken.
    for (int width = 6; width >= 1; --width)
    {
        std::optional<NaiveSizing> best;
        for (int k0 = 1; k0 <= 8; ++k0)
        {
            DecoderArch arch;
            arch.latent_side = latent_side;
            arch.channels.assign(static_cast<std::size_t>(blocks) + 2, width);
            arch.channels.front() = k0;
            arch.channels.back() = K;
            const long total = count_params(arch) + arch.latent_size();
            if (total < 0.95 * budget || total > 1.05 * budget)
                continue;
            if (!best || std::abs(total - budget) < std::abs(best->param_count - budget))
                best = NaiveSizing{arch, total, budget};
        }
        if (best)
            return *best;
    }
    throw InfeasibleBudget("naive_sizing: no width within 5% of 1080 + 16R for K = " + std::to_string(K));
}

NaiveResult naive_unn_recover(const Observations &obs, const SamplingMask &mask, Dims3 dims, int R,
                              const SolverConfig &config, Seed seed)
{
    config.validate();
    if (dims.I != dims.J || mask.I() != dims.I || mask.J() != dims.J)
        throw std::invalid_argument("naive_unn_recover: square grid matching the mask required");

    NaiveResult out;
    out.sizing = naive_sizing(dims.K, R, dims.I);
    const auto &arch = out.sizing.arch;

    const Eigen::MatrixXd linear = linear_proxy(obs);
    if (linear.cols() != dims.K)
        throw std::invalid_argument("naive_unn_recover: observations do not match K");
    out.scale = std::max(linear.maxCoeff(), 1e-12);

    DecoderInit init = init_params(arch, InitScheme::xavier, 1, seed);
    DecoderParams &theta = init.theta;
    Eigen::VectorXd z = init.Z.col(0);
    const auto rows = mask.rows();

    auto evaluate = [&](DecoderTrace &trace, Eigen::VectorXd &g_theta, Eigen::VectorXd &g_z) {
        const Eigen::MatrixXd G = decode(theta, z, &trace);
        const Eigen::MatrixXd x_obs = out.scale * G(rows, Eigen::all);
        DataTerm term = std::visit(
            [&](const auto &o) -> DataTerm {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, FpObservations>)
                    return fp_data_term(x_obs, o.y, o.a_offset);
                else
                    return quant_data_term(x_obs, o.labels, o.spec);
            },
            obs);
        Eigen::MatrixXd dG = Eigen::MatrixXd::Zero(G.rows(), G.cols());
        dG(rows, Eigen::all) = out.scale * term.grad;
        g_theta = Eigen::VectorXd::Zero(theta.values().size());
        g_z = decode_adjoint(theta, trace, dG, g_theta);
        const Eigen::VectorXd conv = theta.values().cwiseProduct(theta.conv_weight_mask());
        g_theta += 2.0 * config.reg.lambda3 * conv;
        g_z += 2.0 * config.reg.lambda1 * z;
        return term.value + config.reg.lambda3 * conv.squaredNorm() + config.reg.lambda1 * z.squaredNorm();
    };

    Adam<Eigen::VectorXd> adam_theta(theta.values().size(), 1, config.adam);
    Adam<Eigen::VectorXd> adam_z(z.size(), 1, config.adam);
    DecoderTrace trace;
    Eigen::VectorXd g_theta, g_z;
    double loss = evaluate(trace, g_theta, g_z);
    out.trace.push_back(loss);
    for (int it = 0; it < config.max_iter; ++it)
    {
        adam_z.step(z, g_z, config.decoder_step);
        adam_theta.step(theta.values(), g_theta, config.decoder_step);
        const double next = evaluate(trace, g_theta, g_z);
        if (!std::isfinite(next))
            throw std::runtime_error("naive_unn_recover: loss diverged");
        out.trace.push_back(next);
        const bool done = std::abs(next - loss) / std::max(1.0, std::abs(loss)) < config.tol;
        loss = next;
        if (done)
            break;
    }
    out.raw_output = decode(theta, z);
    out.estimate = RadioMapTensor(dims, RowMatrixXd(out.scale * out.raw_output));
    return out;
}

} // namespace rmcart
