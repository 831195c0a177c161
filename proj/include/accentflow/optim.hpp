// Copyright (c) 2026 The accentflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "accentflow/nn.hpp"

namespace af {

struct AdamConfig {
  real lr = 2e-4;
  real beta1 = 0.8;
  real beta2 = 0.99;
  real eps = 1e-9;
  real lr_decay = 0.999875;  // exponential, per step
  real grad_clip = 0.0;      // max global norm; 0 disables
};

// Adam with bias correction over a fixed named parameter list.
class Adam {
 public:
  Adam(nn::NamedParams params, const AdamConfig& cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (const auto& [name, p] : params_) {
      m_.push_back(Tensor::zeros(p->value.shape));
      v_.push_back(Tensor::zeros(p->value.shape));
    }
  }

  void zero_grad() {
    for (auto& [name, p] : params_) {
      p->ensure_grad();
      p->grad.fill(0.0);
    }
  }

  real current_lr() const {
    return cfg_.lr * std::pow(cfg_.lr_decay, static_cast<double>(step_));
  }

  void step() {
    if (cfg_.grad_clip > 0.0) clip_global_norm(cfg_.grad_clip);
    const real lr = current_lr();
    ++step_;
    const real bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const real bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i].second;
      p->ensure_grad();
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      for (size_t j = 0; j < p->value.data.size(); ++j) {
        const real g = p->grad.data[j];
        m.data[j] = cfg_.beta1 * m.data[j] + (1.0 - cfg_.beta1) * g;
        v.data[j] = cfg_.beta2 * v.data[j] + (1.0 - cfg_.beta2) * g * g;
        const real mhat = m.data[j] / bc1;
        const real vhat = v.data[j] / bc2;
        p->value.data[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  int64_t step_count() const { return step_; }
  void set_step_count(int64_t s) { step_ = s; }

  const nn::NamedParams& params() const { return params_; }
  std::vector<Tensor>& moment1() { return m_; }
  std::vector<Tensor>& moment2() { return v_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  void clip_global_norm(real max_norm) {
    double sq = 0.0;
    for (const auto& [name, p] : params_) {
      if (!p->grad_ready) continue;
      for (real g : p->grad.data) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const real scale = max_norm / norm;
    for (auto& [name, p] : params_) {
      if (!p->grad_ready) continue;
      for (real& g : p->grad.data) g *= scale;
    }
  }

  nn::NamedParams params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  int64_t step_ = 0;
};

}  // namespace af
