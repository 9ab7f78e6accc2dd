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

#ifndef RMCART_ADAM_HPP
#define RMCART_ADAM_HPP

#include <Eigen/Dense>

#include <cmath>

namespace rmcart {

struct AdamParams
{
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment state for one parameter block of fixed shape.
template <typename PlainObject>
class Adam
{
  public:
    Adam(Eigen::Index rows, Eigen::Index cols, AdamParams params = {})
        : params_(params), m_(PlainObject::Zero(rows, cols)), v_(PlainObject::Zero(rows, cols))
    {
    }

    template <typename X, typename G>
    void step(Eigen::MatrixBase<X> &x, const Eigen::MatrixBase<G> &grad, double learning_rate)
    {
        ++t_;
        m_ = params_.beta1 * m_ + (1.0 - params_.beta1) * grad;
        v_ = params_.beta2 * v_ + (1.0 - params_.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(params_.beta1, t_);
        const double c2 = 1.0 - std::pow(params_.beta2, t_);
        x.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + params_.epsilon);
    }

    [[nodiscard]] long steps() const { return t_; }

  private:
    AdamParams params_;
    PlainObject m_, v_;
    long t_ = 0;
};

} // namespace rmcart

#endif // RMCART_ADAM_HPP
