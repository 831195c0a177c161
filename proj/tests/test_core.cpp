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

#include <catch2/catch.hpp>
#include <cmath>

#include "accentflow/autograd.hpp"
#include "accentflow/fft.hpp"
#include "accentflow/tensor.hpp"
#include "testutil.hpp"

using namespace af;
using ag::Var;
using aftest::check_gradient;
using aftest::fd_gradient;
using aftest::grad_mismatch;

TEST_CASE("rng is deterministic and normal moments are sane") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());
  Rng r(7);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  REQUIRE(std::abs(sum / n) < 0.01);
  REQUIRE(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("fft matches naive dft") {
  const size_t n = 64;
  Rng rng(3);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1, 1);
  std::vector<double> re, im;
  rfft(x, re, im);
  for (size_t k = 0; k <= n / 2; ++k) {
    double nr = 0, ni = 0;
    for (size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * k * t / n;
      nr += x[t] * std::cos(ang);
      ni += x[t] * std::sin(ang);
    }
    REQUIRE(re[k] == Approx(nr).margin(1e-9));
    REQUIRE(im[k] == Approx(ni).margin(1e-9));
  }
}

TEST_CASE("rfft_adjoint is the true adjoint of rfft") {
  const size_t n = 128;
  Rng rng(5);
  std::vector<double> x(n), gre(n / 2 + 1), gim(n / 2 + 1);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : gre) v = rng.uniform(-1, 1);
  for (auto& v : gim) v = rng.uniform(-1, 1);
  std::vector<double> re, im, adj;
  rfft(x, re, im);
  rfft_adjoint(gre, gim, n, adj);
  double lhs = 0, rhs = 0;  // <rfft(x), g> vs <x, adjoint(g)>
  for (size_t k = 0; k <= n / 2; ++k) lhs += re[k] * gre[k] + im[k] * gim[k];
  for (size_t t = 0; t < n; ++t) rhs += x[t] * adj[t];
  REQUIRE(lhs == Approx(rhs).epsilon(1e-10));
}

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng(11);
  const Tensor x = Tensor::uniform({3, 4}, rng, 0.2, 1.5);  // positive for log
  const Tensor y = Tensor::uniform({3, 4}, rng, -1.0, 1.0);

  auto check1 = [&](const std::function<Var(const Var&)>& op, const Tensor& in) {
    return check_gradient(
        [&](const Var& v) { return ag::mean_all(op(v)); }, in);
  };

  REQUIRE(check1([](const Var& v) { return ag::exp_(v); }, y) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::log_(v); }, x) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::tanh_(v); }, y) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::softplus(v); }, y) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::square(v); }, y) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::leaky_relu(v, 0.1); }, x) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::mul_scalar(v, -2.5); }, y) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::add_scalar(v, 3.0); }, y) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::abs_(v); }, x) < 1e-6);
  REQUIRE(check1([](const Var& v) { return ag::softmax_rows(v); }, y) < 1e-6);
}

TEST_CASE("binary op gradients and reuse accumulation") {
  Rng rng(13);
  const Tensor a = Tensor::uniform({2, 3}, rng, -1, 1);
  const Tensor b = Tensor::uniform({2, 3}, rng, -1, 1);

  // d/da mean(a*b + a) with a reused twice
  Var va = ag::leaf(a);
  Var vb = ag::constant(b);
  Var out = ag::mean_all(ag::add(ag::mul(va, vb), va));
  ag::backward(out);
  const Tensor fd = fd_gradient(
      [&](const Tensor& t) {
        Var v = ag::constant(t);
        return ag::scalar_value(ag::mean_all(ag::add(ag::mul(v, vb), v)));
      },
      a);
  REQUIRE(grad_mismatch(va->grad, fd) < 1e-6);
}

TEST_CASE("matmul gradient and value") {
  Rng rng(17);
  const Tensor a = Tensor::uniform({3, 5}, rng, -1, 1);
  const Tensor b = Tensor::uniform({5, 4}, rng, -1, 1);

  {  // value against direct triple loop
    Var v = ag::matmul(ag::constant(a), ag::constant(b));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0;
        for (int k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
        REQUIRE(v->value.at(i, j) == Approx(s).margin(1e-12));
      }
  }

  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(ag::matmul(v, ag::constant(b)));
              },
              a) < 1e-6);
  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(ag::matmul(ag::constant(a), v));
              },
              b) < 1e-6);
}

TEST_CASE("shape op gradients") {
  Rng rng(19);
  const Tensor x = Tensor::uniform({4, 6}, rng, -1, 1);
  REQUIRE(check_gradient(
              [](const Var& v) { return ag::mean_all(ag::transpose2d(v)); },
              x) < 1e-6);
  REQUIRE(check_gradient(
              [](const Var& v) {
                return ag::mean_all(ag::reshape(v, {2, 12}));
              },
              x) < 1e-6);
  REQUIRE(check_gradient(
              [](const Var& v) {
                return ag::mean_all(ag::slice_rows(v, 1, 2));
              },
              x) < 1e-6);
  REQUIRE(check_gradient(
              [](const Var& v) {
                return ag::mean_all(ag::slice_cols(v, 2, 3));
              },
              x) < 1e-6);
  REQUIRE(check_gradient(
              [](const Var& v) {
                return ag::mean_all(ag::concat_cols(v, ag::slice_cols(v, 0, 2)));
              },
              x) < 1e-6);
  REQUIRE(check_gradient(
              [](const Var& v) {
                return ag::mean_all(ag::concat_rows(v, ag::slice_rows(v, 0, 1)));
              },
              x) < 1e-6);
  const Tensor vec = Tensor::uniform({6}, rng, -1, 1);
  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(ag::add_rowvec(ag::constant(x), v));
              },
              vec) < 1e-6);
}

TEST_CASE("layer_norm gradient wrt input, gain and bias") {
  Rng rng(23);
  const Tensor x = Tensor::uniform({3, 8}, rng, -2, 2);
  const Tensor g = Tensor::uniform({8}, rng, 0.5, 1.5);
  const Tensor b = Tensor::uniform({8}, rng, -0.5, 0.5);

  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(
                    ag::layer_norm(v, ag::constant(g), ag::constant(b)));
              },
              x) < 1e-5);
  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(
                    ag::layer_norm(ag::constant(x), v, ag::constant(b)));
              },
              g) < 1e-6);
  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(
                    ag::layer_norm(ag::constant(x), ag::constant(g), v));
              },
              b) < 1e-6);
}

TEST_CASE("conv1d value on a hand example") {
  // x = [1,2,3], w = [1,1], no pad: out = [3,5]
  Var x = ag::constant(Tensor({1, 1, 3}, {1, 2, 3}));
  Var w = ag::constant(Tensor({1, 1, 2}, {1, 1}));
  Var b = ag::constant(Tensor({1}, {0}));
  Var y = ag::conv1d(x, w, b);
  REQUIRE(y->value.shape == std::vector<int>{1, 1, 2});
  REQUIRE(y->value.data[0] == Approx(3.0));
  REQUIRE(y->value.data[1] == Approx(5.0));
}

TEST_CASE("conv1d gradients across stride/pad/dilation/groups") {
  Rng rng(29);
  struct Case {
    int stride, pad, dilation, groups;
  };
  for (const Case c : {Case{1, 2, 1, 1}, Case{3, 2, 1, 1}, Case{1, 3, 2, 1},
                       Case{1, 1, 1, 2}}) {
    const int cin = 4, cout = 4, K = 3, T = 11, B = 2;
    const Tensor x = Tensor::uniform({B, cin, T}, rng, -1, 1);
    const Tensor w =
        Tensor::uniform({cout, cin / c.groups, K}, rng, -0.7, 0.7);
    const Tensor bias = Tensor::uniform({cout}, rng, -0.3, 0.3);

    REQUIRE(check_gradient(
                [&](const Var& v) {
                  return ag::mean_all(ag::conv1d(v, ag::constant(w),
                                                 ag::constant(bias), c.stride,
                                                 c.pad, c.dilation, c.groups));
                },
                x) < 1e-5);
    REQUIRE(check_gradient(
                [&](const Var& v) {
                  return ag::mean_all(ag::conv1d(ag::constant(x), v,
                                                 ag::constant(bias), c.stride,
                                                 c.pad, c.dilation, c.groups));
                },
                w) < 1e-5);
    REQUIRE(check_gradient(
                [&](const Var& v) {
                  return ag::mean_all(ag::conv1d(ag::constant(x),
                                                 ag::constant(w), v, c.stride,
                                                 c.pad, c.dilation, c.groups));
                },
                bias) < 1e-5);
  }
}

TEST_CASE("conv_transpose1d length arithmetic and gradients") {
  // the decoder's upsampling configurations must multiply length exactly
  struct Case {
    int K, stride, pad, opad, factor;
  };
  Rng rng(31);
  for (const Case c : {Case{10, 5, 3, 1, 5}, Case{8, 4, 2, 0, 4},
                       Case{4, 2, 1, 0, 2}}) {
    const int T = 7;
    const Tensor x = Tensor::uniform({1, 3, T}, rng, -1, 1);
    const Tensor w = Tensor::uniform({3, 2, c.K}, rng, -0.5, 0.5);
    const Tensor b = Tensor::uniform({2}, rng, -0.2, 0.2);
    Var y = ag::conv_transpose1d(ag::constant(x), ag::constant(w),
                                 ag::constant(b), c.stride, c.pad, c.opad);
    REQUIRE(y->value.dim(2) == T * c.factor);

    REQUIRE(check_gradient(
                [&](const Var& v) {
                  return ag::mean_all(ag::conv_transpose1d(
                      v, ag::constant(w), ag::constant(b), c.stride, c.pad,
                      c.opad));
                },
                x) < 1e-5);
    REQUIRE(check_gradient(
                [&](const Var& v) {
                  return ag::mean_all(ag::conv_transpose1d(
                      ag::constant(x), v, ag::constant(b), c.stride, c.pad,
                      c.opad));
                },
                w) < 1e-5);
  }
}

TEST_CASE("avg_pool1d gradient") {
  Rng rng(37);
  const Tensor x = Tensor::uniform({2, 3, 10}, rng, -1, 1);
  REQUIRE(check_gradient(
              [](const Var& v) {
                return ag::mean_all(ag::avg_pool1d(v, 4, 2, 2));
              },
              x) < 1e-6);
}

TEST_CASE("embedding and gather_rows gradients scatter-add") {
  Rng rng(41);
  const Tensor table = Tensor::uniform({5, 3}, rng, -1, 1);
  const std::vector<int> ids = {1, 3, 1, 0};
  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(ag::embedding(v, ids));
              },
              table) < 1e-6);

  const Tensor x = Tensor::uniform({4, 3}, rng, -1, 1);
  const std::vector<int> idx = {0, 0, 2, 3, 2};
  REQUIRE(check_gradient(
              [&](const Var& v) {
                return ag::mean_all(ag::gather_rows(v, idx));
              },
              x) < 1e-6);
}

TEST_CASE("masked_frame_mean value and gradient") {
  const Tensor x({3, 2}, {1, 2, 3, 4, 100, 100});
  const std::vector<char> mask = {1, 1, 0};
  Var v = ag::masked_frame_mean(ag::constant(x), mask);
  REQUIRE(ag::scalar_value(v) == Approx((1 + 2 + 3 + 4) / 2.0));

  Rng rng(43);
  const Tensor y = Tensor::uniform({4, 3}, rng, -1, 1);
  const std::vector<char> m2 = {1, 0, 1, 1};
  REQUIRE(check_gradient(
              [&](const Var& v2) { return ag::masked_frame_mean(v2, m2); },
              y) < 1e-6);
}

TEST_CASE("dropout scales by keep probability and is deterministic per seed") {
  Rng rng_a(99), rng_b(99);
  const Tensor x = Tensor::full({50, 20}, 1.0);
  Var a = ag::dropout(ag::constant(x), 0.3, true, rng_a);
  Var b = ag::dropout(ag::constant(x), 0.3, true, rng_b);
  REQUIRE(max_abs_diff(a->value, b->value) == 0.0);
  double mean = 0;
  for (real v : a->value.data) mean += v;
  mean /= a->value.numel();
  REQUIRE(mean == Approx(1.0).margin(0.1));  // E[mask/keep] = 1
  // eval mode passes through untouched
  Rng rng_c(1);
  Var c = ag::dropout(ag::constant(x), 0.3, false, rng_c);
  REQUIRE(max_abs_diff(c->value, x) == 0.0);
}

TEST_CASE("backward requires scalar root and constants have no graph") {
  Var c = ag::constant(Tensor::full({2, 2}, 1.0));
  Var d = ag::mul(c, c);
  REQUIRE_FALSE(d->requires_grad);
  REQUIRE(d->parents.empty());
  Var leafv = ag::leaf(Tensor::full({2, 2}, 1.0));
  REQUIRE_THROWS_AS(ag::backward(ag::mul(leafv, leafv)), Error);
}
