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

#include "rmcart/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace rmcart {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Seed Seed::derive(std::uint64_t tag) const
{
    return Seed{splitmix64(splitmix64(value) ^ (tag * 0xd1342543de82ef95ULL + 1))};
}

const char *to_string(FormatErrc code)
{
    switch (code)
    {
    case FormatErrc::io_error: return "io error";
    case FormatErrc::malformed_header: return "malformed header";
    case FormatErrc::truncated_payload: return "truncated payload";
    case FormatErrc::negative_entry: return "negative entry";
    case FormatErrc::trailing_data: return "trailing data";
    case FormatErrc::malformed_line: return "malformed line";
    }
    return "unknown format error";
}

// RadioMapTensor ----------------------------------------------------------

namespace {

void check_dims(Dims3 d)
{
    if (d.I <= 0 || d.J <= 0 || d.K <= 0)
        throw std::invalid_argument("RadioMapTensor: dimensions must be positive");
}

void check_nonnegative(const std::vector<double> &v)
{
    for (double x : v)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::invalid_argument("RadioMapTensor: entries must be finite and >= 0");
}

} // namespace

RadioMapTensor::RadioMapTensor(Dims3 dims) : dims_(dims)
{
    check_dims(dims);
    data_.assign(static_cast<std::size_t>(dims.I) * dims.J * dims.K, 0.0);
}

RadioMapTensor::RadioMapTensor(Dims3 dims, std::vector<double> values) : dims_(dims), data_(std::move(values))
{
    check_dims(dims);
    if (data_.size() != static_cast<std::size_t>(dims.I) * dims.J * dims.K)
        throw std::invalid_argument("RadioMapTensor: value count does not match I*J*K");
    check_nonnegative(data_);
}

RadioMapTensor::RadioMapTensor(Dims3 dims, const Eigen::Ref<const RowMatrixXd> &unfolded) : dims_(dims)
{
    check_dims(dims);
    if (unfolded.rows() != static_cast<Eigen::Index>(dims.I) * dims.J || unfolded.cols() != dims.K)
        throw std::invalid_argument("RadioMapTensor: unfolding shape does not match dims");
    data_.resize(static_cast<std::size_t>(unfolded.size()));
    Eigen::Map<RowMatrixXd>(data_.data(), unfolded.rows(), unfolded.cols()) = unfolded;
    check_nonnegative(data_);
}

RowMatrixXd RadioMapTensor::band(int k) const
{
    if (k < 0 || k >= dims_.K)
        throw std::out_of_range("RadioMapTensor::band: band index out of range");
    RowMatrixXd out(dims_.I, dims_.J);
    for (int i = 0; i < dims_.I; ++i)
        for (int j = 0; j < dims_.J; ++j)
            out(i, j) = (*this)(i, j, k);
    return out;
}

// SamplingMask ------------------------------------------------------------

SamplingMask::SamplingMask(int I, int J, std::vector<GridCell> cells) : I_(I), J_(J), cells_(std::move(cells))
{
    if (I <= 0 || J <= 0)
        throw std::invalid_argument("SamplingMask: grid dimensions must be positive");
    if (cells_.empty())
        throw std::invalid_argument("SamplingMask: at least one location is required");
    std::set<GridCell> seen;
    for (const auto &c : cells_)
    {
        if (c.i < 0 || c.i >= I || c.j < 0 || c.j >= J)
            throw std::invalid_argument("SamplingMask: location outside the grid");
        if (!seen.insert(c).second)
            throw std::invalid_argument("SamplingMask: duplicate location");
    }
}

std::vector<Eigen::Index> SamplingMask::rows() const
{
    std::vector<Eigen::Index> out;
    out.reserve(cells_.size());
    for (const auto &c : cells_)
        out.push_back(static_cast<Eigen::Index>(c.i) * J_ + c.j);
    return out;
}

// RMT1 I/O ----------------------------------------------------------------

namespace {

std::uint64_t to_little_endian(std::uint64_t bits)
{
    if constexpr (std::endian::native == std::endian::big)
        return __builtin_bswap64(bits);
    return bits;
}

} // namespace

void tensor_write(const std::filesystem::path &path, const RadioMapTensor &X)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string() + " for writing");
    out << "RMT1 " << X.I() << ' ' << X.J() << ' ' << X.K() << '\n';
    std::vector<std::uint64_t> raw(X.size());
    for (std::size_t n = 0; n < X.size(); ++n)
        raw[n] = to_little_endian(std::bit_cast<std::uint64_t>(X.values()[n]));
    out.write(reinterpret_cast<const char *>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
    if (!out)
        throw FormatError(FormatErrc::io_error, "write failed for " + path.string());
}

RadioMapTensor tensor_read(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string());

    std::string header;
    if (!std::getline(in, header))
        throw FormatError(FormatErrc::malformed_header, "missing header line");
    std::istringstream hs(header);
    std::string magic;
    long long I = 0, J = 0, K = 0;
    std::string extra;
    if (!(hs >> magic >> I >> J >> K) || magic != "RMT1" || (hs >> extra) || I <= 0 || J <= 0 || K <= 0)
        throw FormatError(FormatErrc::malformed_header, "expected \"RMT1 <I> <J> <K>\", got \"" + header + "\"");
    // The header must be exactly one space-separated line.
    if (header != "RMT1 " + std::to_string(I) + ' ' + std::to_string(J) + ' ' + std::to_string(K))
        throw FormatError(FormatErrc::malformed_header, "non-canonical header \"" + header + "\"");

    const auto count = static_cast<std::size_t>(I * J * K);
    std::vector<std::uint64_t> raw(count);
    in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(count * 8));
    if (static_cast<std::size_t>(in.gcount()) != count * 8)
        throw FormatError(FormatErrc::truncated_payload,
                          "expected " + std::to_string(count) + " values, file holds " +
                              std::to_string(in.gcount() / 8));
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError(FormatErrc::trailing_data, "bytes after the payload");

    std::vector<double> values(count);
    for (std::size_t n = 0; n < count; ++n)
    {
        values[n] = std::bit_cast<double>(to_little_endian(raw[n]));
        if (!(values[n] >= 0.0) || !std::isfinite(values[n]))
            throw FormatError(FormatErrc::negative_entry, "entry " + std::to_string(n) + " is negative or non-finite");
    }
    return RadioMapTensor({static_cast<int>(I), static_cast<int>(J), static_cast<int>(K)}, std::move(values));
}

// Masks -------------------------------------------------------------------

int sample_count(int I, int J, double rho)
{
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument("mask_sample: rho must lie in (0, 1]");
    if (I <= 0 || J <= 0)
        throw std::invalid_argument("mask_sample: grid dimensions must be positive");
    // std::lround rounds half away from zero.
    const long n = std::lround(rho * static_cast<double>(I) * static_cast<double>(J));
    if (n < 1)
        throw std::invalid_argument("mask_sample: rho * I * J rounds to zero sensors");
    return static_cast<int>(std::min<long>(n, static_cast<long>(I) * J));
}

SamplingMask mask_sample(int I, int J, double rho, Seed seed)
{
    const int N = sample_count(I, J, rho);
    std::vector<int> cells(static_cast<std::size_t>(I) * J);
    std::iota(cells.begin(), cells.end(), 0);
    auto rng = seed.engine();
    // Partial Fisher-Yates: the first N slots are a uniform draw without replacement.
    for (int n = 0; n < N; ++n)
    {
        std::uniform_int_distribution<int> pick(n, static_cast<int>(cells.size()) - 1);
        std::swap(cells[n], cells[pick(rng)]);
    }
    std::vector<GridCell> out;
    out.reserve(N);
    for (int n = 0; n < N; ++n)
        out.push_back({cells[n] / J, cells[n] % J});
    return SamplingMask(I, J, std::move(out));
}

void mask_write(const std::filesystem::path &path, const SamplingMask &mask)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string() + " for writing");
    for (const auto &c : mask.cells())
        out << c.i << ',' << c.j << '\n';
}

SamplingMask mask_read(const std::filesystem::path &path, int I, int J)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError(FormatErrc::io_error, "cannot open " + path.string());
    std::vector<GridCell> cells;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        GridCell c;
        char comma = 0;
        std::istringstream ls(line);
        std::string rest;
        if (!(ls >> c.i >> comma >> c.j) || comma != ',' || (ls >> rest))
            throw FormatError(FormatErrc::malformed_line, path.string() + ":" + std::to_string(lineno));
        cells.push_back(c);
    }
    return SamplingMask(I, J, std::move(cells));
}

Measurements apply_mask(const RadioMapTensor &X, const SamplingMask &mask)
{
    if (mask.I() != X.I() || mask.J() != X.J())
        throw std::invalid_argument("apply_mask: mask grid does not match tensor");
    const auto rows = mask.rows();
    const auto unfolded = X.unfolded();
    Eigen::MatrixXd fibers(static_cast<Eigen::Index>(rows.size()), X.K());
    for (std::size_t s = 0; s < rows.size(); ++s)
        fibers.row(static_cast<Eigen::Index>(s)) = unfolded.row(rows[s]);
    return {mask, std::move(fibers)};
}

} // namespace rmcart
