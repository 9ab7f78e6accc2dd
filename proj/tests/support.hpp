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

#ifndef RMCART_TESTS_SUPPORT_HPP
#define RMCART_TESTS_SUPPORT_HPP

#include "rmcart/core.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace rmcart::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
  public:
    explicit TempDir(const std::string &tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("rmcart_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const std::filesystem::path &path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index n = 0; n < M.size(); ++n)
        M.data()[n] = u(rng);
    return M;
}

/// max_i |a_i - b_i| / max(1e-8, max_i |b_i|)
template <typename A, typename B>
double max_rel_error(const A &a, const B &b)
{
    const double scale = std::max(1e-8, b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Central differences of f at x, entry by entry.
template <typename F>
Eigen::MatrixXd numeric_gradient(const F &f, Eigen::MatrixXd x, double h = 1e-5)
{
    Eigen::MatrixXd g(x.rows(), x.cols());
    for (Eigen::Index n = 0; n < x.size(); ++n)
    {
        const double keep = x.data()[n];
        x.data()[n] = keep + h;
        const double up = f(x);
        x.data()[n] = keep - h;
        const double down = f(x);
        x.data()[n] = keep;
        g.data()[n] = (up - down) / (2 * h);
    }
    return g;
}

} // namespace rmcart::test

#endif // RMCART_TESTS_SUPPORT_HPP
