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
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <optional>

using namespace rmcart;
using Eigen::MatrixXd;

namespace {

// Sum over r of (A_r B_r^T) outer c_r with nonnegative factors.
RadioMapTensor block_term_tensor(int I, int J, int K, int R, int rank, std::uint64_t seed)
{
    MatrixXd slfs(I * J, R);
    for (int r = 0; r < R; ++r)
    {
        const MatrixXd A = test::uniform_matrix(I, rank, 0, 1, seed + 10 * r);
        const MatrixXd B = test::uniform_matrix(J, rank, 0, 1, seed + 10 * r + 1);
        const RowMatrixXd S = A * B.transpose();
        slfs.col(r) = Eigen::Map<const Eigen::VectorXd>(S.data(), I * J);
    }
    const PsdMatrix C = test::uniform_matrix(K, R, 0, 1, seed + 999);
    return assemble_map(Dims3{I, J, K}, slfs, C);
}

double rel_error(const RadioMapTensor &a, const RadioMapTensor &b)
{
    return (a.unfolded() - b.unfolded()).norm() / b.unfolded().norm();
}

} // namespace

TEST_CASE("idw with one sensor is constant", "[baselines]")
{
    Measurements m{SamplingMask(6, 7, {{2, 3}}), MatrixXd(1, 4)};
    m.fibers << 0.5, 2.0, 0.0, 1e-4;
    const RadioMapTensor X = idw_interpolate(m, Dims3{6, 7, 4});
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 7; ++j)
            for (int k = 0; k < 4; ++k)
                CHECK(X(i, j, k) == Catch::Approx(m.fibers(0, k)).epsilon(1e-12).margin(1e-15));
    CHECK_THROWS_AS(idw_interpolate(m, Dims3{5, 7, 4}), std::invalid_argument);
}

TEST_CASE("idw interpolates and stays within the data range", "[baselines][property]")
{
    const Dims3 dims{12, 10, 3};
    const SamplingMask mask = mask_sample(12, 10, 0.2, Seed{4});
    const Measurements m{mask, test::uniform_matrix(static_cast<Eigen::Index>(mask.count()), 3, 0.01, 5, 5)};
    const RadioMapTensor X = idw_interpolate(m, dims);
    for (std::size_t s = 0; s < mask.count(); ++s)
        for (int k = 0; k < 3; ++k)
            CHECK(X(mask.cells()[s].i, mask.cells()[s].j, k) ==
                  Catch::Approx(m.fibers(static_cast<Eigen::Index>(s), k)).epsilon(1e-12));
    for (int k = 0; k < 3; ++k)
    {
        const RowMatrixXd band = X.band(k);
        CHECK(band.minCoeff() >= m.fibers.col(k).minCoeff() * (1 - 1e-12));
        CHECK(band.maxCoeff() <= m.fibers.col(k).maxCoeff() * (1 + 1e-12));
    }

    // sensor order does not matter
    std::vector<std::size_t> order(mask.count());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::vector<GridCell> cells;
    MatrixXd fibers(m.fibers.rows(), 3);
    for (std::size_t n = 0; n < order.size(); ++n)
    {
        cells.push_back(mask.cells()[order[n]]);
        fibers.row(static_cast<Eigen::Index>(n)) = m.fibers.row(static_cast<Eigen::Index>(order[n]));
    }
    const RadioMapTensor Y = idw_interpolate(Measurements{SamplingMask(12, 10, cells), fibers}, dims);
    CHECK(test::max_rel_error(Y.unfolded(), X.unfolded()) < 1e-12);
}

TEST_CASE("btd recovers a block-term tensor", "[baselines]")
{
    const int I = 10, J = 9, K = 5, R = 2, rank = 2;
    const RadioMapTensor X = block_term_tensor(I, J, K, R, rank, 7);
    const Measurements full = apply_mask(X, mask_sample(I, J, 1.0, Seed{0}));
    BtdConfig config;
    config.rank_L = rank;
    config.iters = 2000;
    config.tol = 1e-14;
    // alternating least squares is nonconvex; best of three restarts
    const auto best_fit = [&](int rank_R) {
        std::optional<BtdResult> best;
        for (std::uint64_t restart = 1; restart <= 3; ++restart)
        {
            config.seed = Seed{restart};
            BtdResult fit = btd_fit(full, X.dims(), rank_R, config);
            if (!best || rel_error(fit.estimate, X) < rel_error(best->estimate, X))
                best = std::move(fit);
        }
        return *best;
    };
    const BtdResult fit = best_fit(R);
    const double base = rel_error(fit.estimate, X);
    CHECK(base < 1e-3);
    CHECK(fit.C.minCoeff() >= 0.0);
    CHECK(btd_recover(full, X.dims(), R, config) == btd_fit(full, X.dims(), R, config).estimate);

    // every block update is an exact least-squares solve
    for (std::size_t n = 1; n < fit.block_objective.size(); ++n)
        CHECK(fit.block_objective[n] <= fit.block_objective[n - 1] * (1 + 1e-10) + 1e-10);

    CHECK(rel_error(best_fit(R + 1).estimate, X) <= std::max(2.0 * base, 1e-3));
}

TEST_CASE("btd with full spatial rank fits any single emitter", "[baselines][property]")
{
    for (std::uint64_t seed = 0; seed < 3; ++seed)
    {
        const int I = 6, J = 7, K = 4;
        const RowMatrixXd S = test::uniform_matrix(I, J, 0.1, 1, seed);
        const PsdMatrix c = test::uniform_matrix(K, 1, 0.1, 1, seed + 50);
        const RadioMapTensor X = assemble_map(std::vector<SlfMatrix>{S}, c);
        BtdConfig config;
        config.rank_L = std::min(I, J);
        config.iters = 3000;
        config.tol = 1e-15;
        config.seed = Seed{seed};
        CHECK(rel_error(btd_recover(apply_mask(X, mask_sample(I, J, 1.0, Seed{0})), X.dims(), 1, config), X) < 1e-6);
    }
}

TEST_CASE("btd rejects bad settings", "[baselines]")
{
    const RadioMapTensor X = block_term_tensor(6, 6, 3, 1, 1, 2);
    const Measurements full = apply_mask(X, mask_sample(6, 6, 1.0, Seed{0}));
    BtdConfig config;
    config.rank_L = 0;
    CHECK_THROWS_AS(btd_recover(full, X.dims(), 1, config), std::invalid_argument);
    config.rank_L = 7;
    CHECK_THROWS_AS(btd_recover(full, X.dims(), 1, config), std::invalid_argument);
    config.rank_L = 2;
    CHECK_THROWS_AS(btd_recover(full, X.dims(), 0, config), std::invalid_argument);
    CHECK_THROWS_AS(btd_recover(full, Dims3{6, 6, 4}, 1, config), std::invalid_argument);
}

TEST_CASE("naive decoder sizing meets the parameter budget", "[baselines]")
{
    for (int R = 1; R <= 6; ++R)
    {
        const NaiveSizing n = naive_sizing(64, R);
        CHECK(n.budget == 1080 + 16 * R);
        CHECK(n.param_count >= 0.95 * n.budget);
        CHECK(n.param_count <= 1.05 * n.budget);
        CHECK(n.param_count == count_params(n.arch) + n.arch.latent_size());
        CHECK(n.arch.output_channels() == 64);
        CHECK(n.arch.output_side() == 64);
    }
    CHECK_THROWS_AS(naive_sizing(2000, 1), InfeasibleBudget);
}

TEST_CASE("naive decoder output shape and range", "[baselines]")
{
    ScenarioParams p;
    p.I = p.J = 16;
    p.K = 64;
    p.R = 2;
    p.Xc = 8.0;
    const Scenario s = generate_scenario(p, Seed{3});
    const SamplingMask mask = mask_sample(16, 16, 0.3, Seed{4});
    const FpObservations obs{h_transform(apply_mask(s.X, mask).fibers.array(), 1e-3).matrix(), 1e-3};
    SolverConfig config;
    config.max_iter = 30;
    const NaiveResult a = naive_unn_recover(obs, mask, s.X.dims(), 2, config, Seed{5});
    CHECK(a.estimate.dims() == s.X.dims());
    CHECK(a.raw_output.rows() == 256);
    CHECK(a.raw_output.cols() == 64);
    CHECK(a.raw_output.minCoeff() > 0.0);
    CHECK(a.raw_output.maxCoeff() < 1.0);
    CHECK(a.trace.back() <= a.trace.front());
    CHECK(naive_unn_recover(obs, mask, s.X.dims(), 2, config, Seed{5}).estimate == a.estimate);
}
