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

#include "rmcart/analysis.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace rmcart;

namespace {

// Per-pixel SSIM with an explicit 2-D Gaussian window over every full window position.
double ssim_reference(const RowMatrixXd &A, const RowMatrixXd &B, double range)
{
    const int w = 11, half = 5;
    double weights[11][11], total = 0.0;
    for (int y = 0; y < w; ++y)
        for (int x = 0; x < w; ++x)
        {
            weights[y][x] = std::exp(-((y - half) * (y - half) + (x - half) * (x - half)) / (2 * 1.5 * 1.5));
            total += weights[y][x];
        }
    const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i + w <= A.rows(); ++i)
        for (int j = 0; j + w <= A.cols(); ++j)
        {
            double ma = 0, mb = 0;
            for (int y = 0; y < w; ++y)
                for (int x = 0; x < w; ++x)
                {
                    ma += weights[y][x] / total * A(i + y, j + x);
                    mb += weights[y][x] / total * B(i + y, j + x);
                }
            double va = 0, vb = 0, cab = 0;
            for (int y = 0; y < w; ++y)
                for (int x = 0; x < w; ++x)
                {
                    const double u = weights[y][x] / total;
                    va += u * (A(i + y, j + x) - ma) * (A(i + y, j + x) - ma);
                    vb += u * (B(i + y, j + x) - mb) * (B(i + y, j + x) - mb);
                    cab += u * (A(i + y, j + x) - ma) * (B(i + y, j + x) - mb);
                }
            sum += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return sum / count;
}

// Direct transcription of the two covering-number expressions.
double ref_H(const BoundParams &p)
{
    return 4 * p.a * p.a * p.b * p.b * p.P * std::log(2.0 * p.W * p.W) * std::pow(p.s, 2 * p.L - 2) * p.L * p.L *
               p.L / (p.epsilon * p.epsilon) +
           double(p.D0) * p.D0 * std::log(6 * p.P * p.a / p.epsilon);
}

double ref_Xunn(const BoundParams &p)
{
    const double R = p.R, kg = p.kappa + p.gamma;
    return R * R * R * kg * p.a * p.a * p.b * p.b * p.P * std::log(2.0 * p.W * p.W) * std::pow(p.s, 2 * p.L - 2) *
               p.L * p.L * p.L / (p.epsilon * p.epsilon) +
           R * p.D0 * p.D0 * std::log(6 * R * p.P * p.a * kg / p.epsilon) +
           R * p.K * std::log(3 * R * p.kappa * kg / p.epsilon);
}

BoundParams random_params(std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> pos(0.5, 3.0), eps(0.01, 1.0);
    std::uniform_int_distribution<int> small(1, 8), width(2, 16);
    BoundParams p;
    p.R = small(rng);
    p.K = 8 * small(rng);
    p.D0 = 4 * small(rng);
    p.L = small(rng);
    p.W = width(rng);
    p.s = pos(rng);
    p.b = pos(rng);
    p.a = pos(rng);
    p.kappa = pos(rng);
    p.gamma = pos(rng);
    p.P = pos(rng);
    p.epsilon = eps(rng);
    p.N = 100 * small(rng);
    return p;
}

} // namespace

TEST_CASE("ssim of identical images is one", "[analysis]")
{
    const RowMatrixXd A = test::uniform_matrix(20, 24, 0, 1, 1);
    CHECK(ssim_band(A, A, SsimOptions{}) == Catch::Approx(1.0).epsilon(1e-14));
    const RowMatrixXd shifted = A.array() + 5.0;
    CHECK(ssim_band(A, shifted, SsimOptions{}) < 0.5);
    CHECK_THROWS_AS(ssim_band(A, RowMatrixXd(A.topRows(19)), SsimOptions{}), std::invalid_argument);
    CHECK_THROWS_AS(ssim_band(RowMatrixXd(A.topRows(8)), RowMatrixXd(A.topRows(8)), SsimOptions{}),
                    std::invalid_argument);
}

TEST_CASE("ssim matches an independent per-pixel implementation", "[analysis]")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        const RowMatrixXd A = test::uniform_matrix(18, 21, -2, 1, 10 + seed);
        const RowMatrixXd B = 0.6 * A + RowMatrixXd(test::uniform_matrix(18, 21, -1, 1, 20 + seed));
        SsimOptions opt;
        opt.dynamic_range = 3.0;
        const double fast = ssim_band(A, B, opt);
        CHECK(std::abs(fast - ssim_reference(A, B, 3.0)) < 1e-6);
        CHECK(fast == Catch::Approx(ssim_band(B, A, opt)).epsilon(1e-14));
        CHECK(fast >= -1.0);
        CHECK(fast <= 1.0);
    }
}

TEST_CASE("band-averaged log ssim", "[analysis]")
{
    ScenarioParams p;
    p.I = p.J = 32;
    p.K = 6;
    p.R = 2;
    p.Xc = 20.0;
    const Scenario s = generate_scenario(p, Seed{2});
    CHECK(ssim_log_avg(s.X, s.X) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(ssim_log_avg(s.X, RadioMapTensor(s.X.dims())) < 0.5);

    // reverse the bands of both tensors
    const RadioMapTensor noisy(s.X.dims(), RowMatrixXd(s.X.unfolded().array() *
                                                      (1.0 + 0.3 * test::uniform_matrix(1024, 6, -1, 1, 3).array())));
    const Eigen::MatrixXd rx = s.X.unfolded().rowwise().reverse();
    const Eigen::MatrixXd rn = noisy.unfolded().rowwise().reverse();
    const double forward_order = ssim_log_avg(s.X, noisy);
    const double reversed = ssim_log_avg(RadioMapTensor(s.X.dims(), RowMatrixXd(rx)),
                                         RadioMapTensor(s.X.dims(), RowMatrixXd(rn)));
    CHECK(reversed == Catch::Approx(forward_order).epsilon(1e-12));
    CHECK_THROWS_AS(ssim_log_avg(s.X, RadioMapTensor(Dims3{32, 32, 5})), std::invalid_argument);
}

TEST_CASE("nmse identities", "[analysis]")
{
    const RadioMapTensor X(Dims3{3, 4, 2}, std::vector<double>(24, 1.5));
    CHECK(nmse(X, X) == 0.0);
    CHECK(nmse(X, RadioMapTensor(X.dims())) == 1.0);
    std::vector<double> twice(24, 3.0);
    CHECK(nmse(X, RadioMapTensor(X.dims(), twice)) == 1.0);
    CHECK_THROWS_AS(nmse(RadioMapTensor(X.dims()), X), std::invalid_argument);
}

TEST_CASE("covering bound worked examples", "[analysis]")
{
    BoundParams p;   // a = b = s = P = L = D0 = R = K = kappa = gamma = 1, W = 2, epsilon = 1
    CHECK(cover_bound_H(p) == Catch::Approx(4 * std::log(8.0) + std::log(6.0)).epsilon(1e-15));
    CHECK(cover_bound_H(p) == Catch::Approx(10.1095).margin(1e-4));
    CHECK(cover_bound_Xunn(p) == Catch::Approx(2 * std::log(8.0) + std::log(12.0) + std::log(6.0)).epsilon(1e-15));
    CHECK(cover_bound_Xunn(p) == Catch::Approx(8.4356).margin(1e-4));

    // D0 = 0 isolates the structure term, which scales with a^2
    BoundParams q;
    q.D0 = 0;
    q.a = 1.0;
    const double one = cover_bound_H(q);
    q.a = 2.0;
    CHECK(cover_bound_H(q) == Catch::Approx(4 * one).epsilon(1e-15));

    BoundParams flat;
    flat.s = 1.0;
    flat.L = 1;
    flat.W = 5;
    flat.D0 = 0;
    CHECK(cover_bound_H(flat) == Catch::Approx(4 * std::log(50.0)).epsilon(1e-15));

    p.epsilon = 0.0;
    CHECK_THROWS_AS(cover_bound_H(p), std::invalid_argument);
    BoundParams big;
    big.epsilon = 100.0;   // 6 R P a (kappa + gamma) / epsilon < 1 keeps the log finite but negative
    CHECK(!log_arguments_exceed_one(big));
    BoundParams zero;
    zero.kappa = 0.0;
    CHECK_THROWS_AS(cover_bound_Xunn(zero), std::domain_error);
}

TEST_CASE("covering bounds match a straight-line transcription", "[analysis][property]")
{
    std::mt19937_64 rng(2024);
    for (int n = 0; n < 100; ++n)
    {
        const BoundParams p = random_params(rng);
        const double h = ref_H(p), x = ref_Xunn(p);
        CHECK(std::abs(cover_bound_H(p) - h) <= 1e-12 * std::abs(h));
        CHECK(std::abs(cover_bound_Xunn(p) - x) <= 1e-12 * std::abs(x));
    }
}

TEST_CASE("covering bounds are monotone", "[analysis][property]")
{
    std::mt19937_64 rng(7);
    for (int n = 0; n < 20; ++n)
    {
        BoundParams p = random_params(rng);
        double prev_h = INFINITY, prev_x = INFINITY;
        for (double eps = 0.01; eps <= 0.5; eps *= 1.3)
        {
            p.epsilon = eps;
            CHECK(cover_bound_H(p) < prev_h);
            CHECK(cover_bound_Xunn(p) < prev_x);
            prev_h = cover_bound_H(p);
            prev_x = cover_bound_Xunn(p);
        }
        p.epsilon = 0.1;
        double prev = -INFINITY;
        for (int R = 1; R <= 8; ++R)
        {
            p.R = R;
            CHECK(cover_bound_Xunn(p) > prev);
            prev = cover_bound_Xunn(p);
        }
    }
}

TEST_CASE("one emitter reduces the set bound to the decoder bound", "[analysis][property]")
{
    // with R = 1 and kappa + gamma = 4 the structure terms coincide and the latent terms differ by D0^2 ln 4
    std::mt19937_64 rng(3);
    for (int n = 0; n < 10; ++n)
    {
        BoundParams p = random_params(rng);
        p.R = 1;
        p.kappa = 1.0;
        p.gamma = 3.0;
        p.K = 1;
        const double spectral = std::log(3 * p.kappa * (p.kappa + p.gamma) / p.epsilon);
        const double latent_shift = double(p.D0) * p.D0 * std::log(p.kappa + p.gamma);
        CHECK(cover_bound_Xunn(p) == Catch::Approx(cover_bound_H(p) + latent_shift + spectral).epsilon(1e-12));
    }
}

TEST_CASE("recovery error bound terms", "[analysis]")
{
    BoundParams p;
    p.R = 2;
    p.K = 16;
    p.N = 100;
    const PropTerms a = prop_bound_terms(p, false);
    p.N = 400;
    const PropTerms b = prop_bound_terms(p, false);
    CHECK(b.term1 == Catch::Approx(a.term1 / 2).epsilon(1e-15));
    CHECK(b.term2 < a.term2);

    const PropTerms q = prop_bound_terms(p, true);
    CHECK(q.term2 == Catch::Approx(std::sqrt(cover_bound_Xunn(p) / 400.0)).epsilon(1e-15));
    CHECK(q.term1 == Catch::Approx(std::sqrt(2.0) / (16 * 20.0)).epsilon(1e-15));

    p.nu = 0.3;
    CHECK(prop_bound_terms(p, false).nu == 0.3);
    p.N = 0;
    CHECK_THROWS_AS(prop_bound_terms(p, false), std::invalid_argument);
}

TEST_CASE("bound parameters from an architecture", "[analysis]")
{
    const BoundParams p = bound_params_for(DecoderArch::standard(), 3, 64);
    CHECK(p.R == 3);
    CHECK(p.K == 64);
    CHECK(p.D0 == 16);
    CHECK(p.L == 5);
    CHECK(p.W == 6);
    CHECK(p.P == 1.0);
    CHECK(p.I == 64);
}
