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

#include <algorithm>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "accentflow/common.hpp"

namespace af {

// Dense row-major tensor of doubles, rank 1..3.
struct Tensor {
  std::vector<int> shape;
  std::vector<real> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<real> d)
      : shape(std::move(s)), data(std::move(d)) {
    AF_CHECK(static_cast<int64_t>(data.size()) == numel_of(shape),
             "tensor data size does not match shape");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      AF_CHECK(d >= 0, "negative dimension");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  real& at(int i) { return data[static_cast<size_t>(i)]; }
  real at(int i) const { return data[static_cast<size_t>(i)]; }
  real& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  real at(int i, int j) const {
    return data[static_cast<size_t>(i) * shape[1] + j];
  }
  real& at(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  real at(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  void fill(real v) { std::fill(data.begin(), data.end(), v); }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int> s, real v) {
    Tensor t(std::move(s));
    t.fill(v);
    return t;
  }

  static Tensor scalar(real v) { return Tensor({1}, {v}); }

  static Tensor from_rows(const std::vector<std::vector<real>>& rows) {
    AF_CHECK(!rows.empty(), "from_rows: empty");
    int cols = static_cast<int>(rows[0].size());
    Tensor t({static_cast<int>(rows.size()), cols});
    for (size_t i = 0; i < rows.size(); ++i) {
      AF_CHECK(static_cast<int>(rows[i].size()) == cols, "ragged rows");
      std::copy(rows[i].begin(), rows[i].end(),
                t.data.begin() + static_cast<int64_t>(i) * cols);
    }
    return t;
  }

  static Tensor uniform(std::vector<int> s, Rng& rng, real lo, real hi) {
    Tensor t(std::move(s));
    for (real& v : t.data) v = rng.uniform(lo, hi);
    return t;
  }

  static Tensor normal(std::vector<int> s, Rng& rng, real mean = 0.0,
                       real stddev = 1.0) {
    Tensor t(std::move(s));
    for (real& v : t.data) v = mean + stddev * rng.normal();
    return t;
  }

  bool all_finite() const {
    for (real v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  real abs_max() const {
    real m = 0.0;
    for (real v : data) m = std::max(m, std::abs(v));
    return m;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

inline real max_abs_diff(const Tensor& a, const Tensor& b) {
  AF_CHECK(a.same_shape(b), "max_abs_diff: shape mismatch");
  real m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace af
