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

#ifndef RMCART_CORE_HPP
#define RMCART_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmcart {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXi = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Seeds -------------------------------------------------------------------

/// Explicit RNG seed. Every stochastic operation takes one; there is no global generator.
struct Seed
{
    std::uint64_t value = 0;

    /// Child seed for an independent stream. Same (parent, tag) always gives the same child.
    [[nodiscard]] Seed derive(std::uint64_t tag) const;
    [[nodiscard]] std::mt19937_64 engine() const { return std::mt19937_64(value); }

    friend bool operator==(const Seed &, const Seed &) = default;
};

std::uint64_t splitmix64(std::uint64_t x);

// Tensors -----------------------------------------------------------------

struct Dims3
{
    int I = 0, J = 0, K = 0;
    friend bool operator==(const Dims3 &, const Dims3 &) = default;
};

/// Dense I x J x K nonnegative power tensor, row-major (i slowest, k fastest).
///
/// The mode-3 unfolding (IJ x K, row index i*J + j) is exposed as a zero-copy
/// Eigen map, which is how every consumer does its linear algebra.
class RadioMapTensor
{
  public:
    RadioMapTensor() = default;
    explicit RadioMapTensor(Dims3 dims);                      // zero-filled
    RadioMapTensor(Dims3 dims, std::vector<double> values);   // validates size and sign
    RadioMapTensor(Dims3 dims, const Eigen::Ref<const RowMatrixXd> &unfolded);

    [[nodiscard]] const Dims3 &dims() const { return dims_; }
    [[nodiscard]] int I() const { return dims_.I; }
    [[nodiscard]] int J() const { return dims_.J; }
    [[nodiscard]] int K() const { return dims_.K; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] double operator()(int i, int j, int k) const
    {
        return data_[(static_cast<std::size_t>(i) * dims_.J + j) * dims_.K + k];
    }
    [[nodiscard]] const std::vector<double> &values() const { return data_; }

    /// IJ x K view; row i*J + j is the spectral fiber at (i, j).
    [[nodiscard]] Eigen::Map<const RowMatrixXd> unfolded() const
    {
        return {data_.data(), static_cast<Eigen::Index>(dims_.I) * dims_.J, dims_.K};
    }
    /// I x J slab at band k.
    [[nodiscard]] RowMatrixXd band(int k) const;

    friend bool operator==(const RadioMapTensor &, const RadioMapTensor &) = default;

  private:
    Dims3 dims_;
    std::vector<double> data_;
};

/// Spatial loss field of one emitter; I x J, entries >= 0.
using SlfMatrix = RowMatrixXd;

/// K x R matrix of emitter power spectra, one column per emitter.
using PsdMatrix = Eigen::MatrixXd;

struct GridCell
{
    int i = 0, j = 0;
    friend auto operator<=>(const GridCell &, const GridCell &) = default;
};

/// Sensor locations. Distinct cells inside an I x J grid; insertion order is kept.
class SamplingMask
{
  public:
    SamplingMask(int I, int J, std::vector<GridCell> cells);

    [[nodiscard]] int I() const { return I_; }
    [[nodiscard]] int J() const { return J_; }
    [[nodiscard]] std::size_t count() const { return cells_.size(); }
    [[nodiscard]] const std::vector<GridCell> &cells() const { return cells_; }
    /// Row indices i*J + j into a mode-3 unfolding.
    [[nodiscard]] std::vector<Eigen::Index> rows() const;

    friend bool operator==(const SamplingMask &, const SamplingMask &) = default;

  private:
    int I_ = 0, J_ = 0;
    std::vector<GridCell> cells_;
};

/// Observed fibers: row s of `fibers` is the K-vector reported at mask.cells()[s].
struct Measurements
{
    SamplingMask mask;
    Eigen::MatrixXd fibers;
};

// Errors ------------------------------------------------------------------

enum class FormatErrc
{
    io_error = 1,
    malformed_header,
    truncated_payload,
    negative_entry,
    trailing_data,
    malformed_line,
};

const char *to_string(FormatErrc code);

class FormatError : public std::runtime_error
{
  public:
    FormatError(FormatErrc code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }
    [[nodiscard]] FormatErrc code() const { return code_; }

  private:
    FormatErrc code_;
};

// Operations --------------------------------------------------------------

/// RMT1 file: ASCII header "RMT1 I J K\n" then I*J*K little-endian float64 values, k fastest.
RadioMapTensor tensor_read(const std::filesystem::path &path);
void tensor_write(const std::filesystem::path &path, const RadioMapTensor &X);

/// N = round(rho * I * J) distinct cells drawn uniformly without replacement.
SamplingMask mask_sample(int I, int J, double rho, Seed seed);
int sample_count(int I, int J, double rho);

/// Mask CSV: one "i,j" line per sensor.
SamplingMask mask_read(const std::filesystem::path &path, int I, int J);
void mask_write(const std::filesystem::path &path, const SamplingMask &mask);

Measurements apply_mask(const RadioMapTensor &X, const SamplingMask &mask);

} // namespace rmcart

#endif // RMCART_CORE_HPP
