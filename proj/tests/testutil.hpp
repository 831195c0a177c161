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

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include "accentflow/autograd.hpp"
#include "accentflow/tensor.hpp"

namespace aftest {

using af::Tensor;
using af::real;

// Central finite differences of a scalar function of one tensor.
inline Tensor fd_gradient(const std::function<double(const Tensor&)>& f,
                          Tensor x, double h = 1e-6) {
  Tensor g(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) {
    const real orig = x.data[i];
    x.data[i] = orig + h;
    const double fp = f(x);
    x.data[i] = orig - h;
    const double fm = f(x);
    x.data[i] = orig;
    g.data[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Hybrid relative/absolute comparison of two gradients.
inline double grad_mismatch(const Tensor& analytic, const Tensor& fd) {
  double worst = 0.0;
  for (size_t i = 0; i < analytic.data.size(); ++i) {
    const double a = analytic.data[i], b = fd.data[i];
    const double denom = std::max({std::abs(a), std::abs(b), 1.0});
    worst = std::max(worst, std::abs(a - b) / denom);
  }
  return worst;
}

// Checks the analytic gradient of `build` (a graph builder returning a scalar
// Var from a leaf) against central differences at the given input.
inline double check_gradient(
    const std::function<af::ag::Var(const af::ag::Var&)>& build,
    const Tensor& x, double h = 1e-6) {
  af::ag::Var leaf = af::ag::leaf(x);
  af::ag::Var y = build(leaf);
  af::ag::backward(y);
  Tensor analytic = leaf->grad;
  Tensor fd = fd_gradient(
      [&](const Tensor& t) {
        return af::ag::scalar_value(build(af::ag::constant(t)));
      },
      x, h);
  return grad_mismatch(analytic, fd);
}

// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    path_ = fs::temp_directory_path() /
            ("accentflow_" + tag + "_" + std::to_string(counter()++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace aftest
