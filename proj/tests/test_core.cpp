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

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

using namespace rmcart;

namespace {

void write_raw(const std::filesystem::path &path, const std::string &header, const std::vector<double> &values)
{
    std::ofstream out(path, std::ios::binary);
    out << header;
    out.write(reinterpret_cast<const char *>(values.data()), static_cast<std::streamsize>(values.size() * 8));
}

FormatErrc read_error(const std::filesystem::path &path)
{
    try
    {
        tensor_read(path);
    }
    catch (const FormatError &e)
    {
        return e.code();
    }
    FAIL("tensor_read accepted a bad file");
    return FormatErrc::io_error;
}

} // namespace

TEST_CASE("tensor files round-trip bit-exactly", "[core]")
{
    test::TempDir dir("core");
    const RadioMapTensor small(Dims3{2, 2, 1}, std::vector<double>{1, 2, 3, 4});
    tensor_write(dir / "a.rmt", small);
    CHECK(tensor_read(dir / "a.rmt") == small);

    std::vector<double> values(3 * 4 * 5);
    for (std::size_t n = 0; n < values.size(); ++n)
        values[n] = std::ldexp(1.0 + 1e-15 * static_cast<double>(n), static_cast<int>(n) - 30);
    const RadioMapTensor odd(Dims3{3, 4, 5}, values);
    tensor_write(dir / "b.rmt", odd);
    const RadioMapTensor back = tensor_read(dir / "b.rmt");
    REQUIRE(back.dims() == odd.dims());
    CHECK(std::memcmp(back.values().data(), odd.values().data(), values.size() * 8) == 0);
}

TEST_CASE("tensor header and payload layout", "[core]")
{
    test::TempDir dir("core");
    const RadioMapTensor X(Dims3{2, 3, 2}, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    tensor_write(dir / "x.rmt", X);
    std::ifstream in(dir / "x.rmt", std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header == "RMT1 2 3 2");
    std::vector<double> payload(12);
    in.read(reinterpret_cast<char *>(payload.data()), 96);
    CHECK(payload == X.values());
    CHECK(X(1, 2, 1) == 11.0);
    CHECK(X.unfolded()(1 * 3 + 2, 1) == 11.0);

    std::vector<double> big(64 * 64 * 64, 0.5);
    write_raw(dir / "big.rmt", "RMT1 64 64 64\n", big);
    CHECK(tensor_read(dir / "big.rmt").dims() == Dims3{64, 64, 64});
}

TEST_CASE("tensor_read reports distinct error codes", "[core]")
{
    test::TempDir dir("core");
    write_raw(dir / "trunc.rmt", "RMT1 2 2 2\n", {1, 2, 3});
    CHECK(read_error(dir / "trunc.rmt") == FormatErrc::truncated_payload);
    write_raw(dir / "neg.rmt", "RMT1 1 1 2\n", {1, -2});
    CHECK(read_error(dir / "neg.rmt") == FormatErrc::negative_entry);
    write_raw(dir / "hdr.rmt", "RMT2 1 1 1\n", {1});
    CHECK(read_error(dir / "hdr.rmt") == FormatErrc::malformed_header);
    write_raw(dir / "hdr2.rmt", "RMT1 1 x 1\n", {1});
    CHECK(read_error(dir / "hdr2.rmt") == FormatErrc::malformed_header);
    write_raw(dir / "tail.rmt", "RMT1 1 1 1\n", {1, 2});
    CHECK(read_error(dir / "tail.rmt") == FormatErrc::trailing_data);
    CHECK(read_error(dir / "missing.rmt") == FormatErrc::io_error);
}

TEST_CASE("tensor construction validates", "[core]")
{
    CHECK_THROWS_AS(RadioMapTensor(Dims3{1, 1, 2}, std::vector<double>{1}), std::invalid_argument);
    CHECK_THROWS_AS(RadioMapTensor(Dims3{1, 1, 1}, std::vector<double>{-1}), std::invalid_argument);
    CHECK_THROWS_AS(RadioMapTensor(Dims3{1, 1, 1}, std::vector<double>{NAN}), std::invalid_argument);
}

TEST_CASE("sample counts round half away from zero", "[core]")
{
    CHECK(sample_count(64, 64, 0.10) == 410);
    CHECK(sample_count(64, 64, 0.05) == 205);
    CHECK(sample_count(2, 5, 0.25) == 3);   // 2.5 -> 3
    CHECK(sample_count(64, 64, 1.0) == 4096);
    CHECK_THROWS_AS(sample_count(8, 8, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sample_count(8, 8, 1.5), std::invalid_argument);
}

TEST_CASE("mask sampling", "[core]")
{
    const SamplingMask m = mask_sample(64, 64, 0.1, Seed{3});
    CHECK(m.count() == 410);
    std::set<GridCell> unique(m.cells().begin(), m.cells().end());
    CHECK(unique.size() == 410);
    for (const auto &c : m.cells())
        CHECK((c.i >= 0 && c.i < 64 && c.j >= 0 && c.j < 64));

    CHECK(mask_sample(64, 64, 1.0, Seed{1}).count() == 4096);
    CHECK(mask_sample(16, 16, 0.2, Seed{9}) == mask_sample(16, 16, 0.2, Seed{9}));

    int differing = 0;
    for (std::uint64_t s = 0; s < 100; ++s)
        differing += mask_sample(16, 16, 0.2, Seed{2 * s}) != mask_sample(16, 16, 0.2, Seed{2 * s + 1});
    CHECK(differing == 100);
    CHECK_THROWS_AS(mask_sample(8, 8, 0.0, Seed{1}), std::invalid_argument);
}

TEST_CASE("mask inclusion frequency is uniform", "[core][property]")
{
    const int trials = 10000;
    const int N = sample_count(8, 8, 0.25);
    std::vector<int> hits(64, 0);
    for (int t = 0; t < trials; ++t)
    {
        const SamplingMask m = mask_sample(8, 8, 0.25, Seed{static_cast<std::uint64_t>(t)});
        for (const auto &c : m.cells())
            ++hits[c.i * 8 + c.j];
    }
    const double p = static_cast<double>(N) / 64.0;
    const double sd = std::sqrt(trials * p * (1 - p));
    for (int h : hits)
        CHECK(std::abs(h - trials * p) < 3.0 * sd + 1.0);
}

TEST_CASE("mask validation and files", "[core]")
{
    CHECK_THROWS_AS(SamplingMask(4, 4, {}), std::invalid_argument);
    CHECK_THROWS_AS(SamplingMask(4, 4, {{0, 0}, {0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(SamplingMask(4, 4, {{4, 0}}), std::invalid_argument);

    test::TempDir dir("core");
    const SamplingMask m = mask_sample(10, 12, 0.3, Seed{5});
    mask_write(dir / "m.csv", m);
    CHECK(mask_read(dir / "m.csv", 10, 12) == m);
    {
        std::ofstream(dir / "bad.csv") << "1,2\n3;4\n";
    }
    CHECK_THROWS_AS(mask_read(dir / "bad.csv", 10, 12), FormatError);
}

TEST_CASE("apply_mask returns whole fibers", "[core]")
{
    const RadioMapTensor seven(Dims3{3, 3, 5}, std::vector<double>(45, 7.0));
    const Measurements one = apply_mask(seven, SamplingMask(3, 3, {{1, 2}}));
    REQUIRE(one.fibers.rows() == 1);
    CHECK(one.fibers.cols() == 5);
    CHECK((one.fibers.array() == 7.0).all());

    std::vector<double> v(2 * 3 * 4);
    for (std::size_t n = 0; n < v.size(); ++n)
        v[n] = static_cast<double>(n);
    const RadioMapTensor X(Dims3{2, 3, 4}, v);
    const Measurements all = apply_mask(X, mask_sample(2, 3, 1.0, Seed{0}));
    CHECK(all.fibers.size() == 24);
    for (std::size_t s = 0; s < all.mask.count(); ++s)
    {
        const auto c = all.mask.cells()[s];
        for (int k = 0; k < 4; ++k)
            CHECK(all.fibers(static_cast<Eigen::Index>(s), k) == X(c.i, c.j, k));
    }
    CHECK_THROWS_AS(apply_mask(X, SamplingMask(3, 3, {{2, 2}})), std::invalid_argument);
}

TEST_CASE("seed derivation is deterministic and spreads", "[core]")
{
    const Seed s{42};
    CHECK(s.derive(1) == s.derive(1));
    CHECK(s.derive(1) != s.derive(2));
    CHECK(Seed{43}.derive(1) != s.derive(1));
    std::set<std::uint64_t> children;
    for (std::uint64_t t = 0; t < 1000; ++t)
        children.insert(s.derive(t).value);
    CHECK(children.size() == 1000);
}
