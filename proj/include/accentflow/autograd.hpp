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
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "accentflow/tensor.hpp"

namespace af {
namespace ag {

// Reverse-mode autodiff over Tensor. The graph is rebuilt on every forward
// pass; nodes hold the forward value, a lazily allocated gradient, and a
// closure that pushes this node's gradient into its parents.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (!grad_ready) {
      grad = Tensor::zeros(value.shape);
      grad_ready = true;
    }
  }
};

inline Var constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  return n;
}

inline Var leaf(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = true;
  return n;
}

inline Var detach(const Var& v) { return constant(v->value); }

inline Var make_node(Tensor value, std::vector<Var> parents,
                     std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& p : parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

inline void backward(const Var& root) {
  AF_CHECK(root->value.numel() == 1, "backward: root must be scalar");
  if (!root->requires_grad) return;

  // iterative post-order DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad.data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad_ready) {
      for (auto& p : n->parents) {
        if (p->requires_grad) p->ensure_grad();
      }
      n->backward_fn(*n);
    }
  }
}

inline real scalar_value(const Var& v) {
  AF_CHECK(v->value.numel() == 1, "scalar_value: not a scalar");
  return v->value.data[0];
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  AF_CHECK(a->value.same_shape(b->value), "add: shape mismatch");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        a->grad.data[i] += n.grad.data[i];
    if (b->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        b->grad.data[i] += n.grad.data[i];
  });
}

inline Var sub(const Var& a, const Var& b) {
  AF_CHECK(a->value.same_shape(b->value), "sub: shape mismatch");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        a->grad.data[i] += n.grad.data[i];
    if (b->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        b->grad.data[i] -= n.grad.data[i];
  });
}

inline Var mul(const Var& a, const Var& b) {
  AF_CHECK(a->value.same_shape(b->value), "mul: shape mismatch");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        a->grad.data[i] += n.grad.data[i] * b->value.data[i];
    if (b->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        b->grad.data[i] += n.grad.data[i] * a->value.data[i];
  });
}

inline Var add_scalar(const Var& a, real s) {
  Tensor out = a->value;
  for (real& v : out.data) v += s;
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] += n.grad.data[i];
  });
}

inline Var mul_scalar(const Var& a, real s) {
  Tensor out = a->value;
  for (real& v : out.data) v *= s;
  return make_node(std::move(out), {a}, [a, s](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] += n.grad.data[i] * s;
  });
}

inline Var neg(const Var& a) { return mul_scalar(a, -1.0); }

// x[T,C] + v broadcast over rows; v has shape [C] or [1,C]
inline Var add_rowvec(const Var& x, const Var& v) {
  AF_CHECK(x->value.rank() == 2, "add_rowvec: x must be rank 2");
  const int T = x->value.dim(0), C = x->value.dim(1);
  AF_CHECK(v->value.numel() == C, "add_rowvec: width mismatch");
  Tensor out = x->value;
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) out.at(t, c) += v->value.data[c];
  return make_node(std::move(out), {x, v}, [x, v, T, C](Node& n) {
    if (x->requires_grad)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        x->grad.data[i] += n.grad.data[i];
    if (v->requires_grad)
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c) v->grad.data[c] += n.grad.at(t, c);
  });
}

inline Var exp_(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data) v = std::exp(v);
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] += n.grad.data[i] * n.value.data[i];
  });
}

inline Var log_(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data) v = std::log(v);
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] += n.grad.data[i] / a->value.data[i];
  });
}

inline Var tanh_(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data) v = std::tanh(v);
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i) {
      const real y = n.value.data[i];
      a->grad.data[i] += n.grad.data[i] * (1.0 - y * y);
    }
  });
}

inline Var relu(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data) v = v > 0 ? v : 0;
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      if (a->value.data[i] > 0) a->grad.data[i] += n.grad.data[i];
  });
}

inline Var leaky_relu(const Var& a, real slope) {
  Tensor out = a->value;
  for (real& v : out.data) v = v > 0 ? v : slope * v;
  return make_node(std::move(out), {a}, [a, slope](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] +=
          n.grad.data[i] * (a->value.data[i] > 0 ? 1.0 : slope);
  });
}

// numerically stable log(1 + e^x)
inline Var softplus(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data)
    v = v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i) {
      const real x = a->value.data[i];
      const real sig = x > 0 ? 1.0 / (1.0 + std::exp(-x))
                             : std::exp(x) / (1.0 + std::exp(x));
      a->grad.data[i] += n.grad.data[i] * sig;
    }
  });
}

inline Var square(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data) v = v * v;
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] += n.grad.data[i] * 2.0 * a->value.data[i];
  });
}

inline Var abs_(const Var& a) {
  Tensor out = a->value;
  for (real& v : out.data) v = std::abs(v);
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i) {
      const real x = a->value.data[i];
      const real s = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
      a->grad.data[i] += n.grad.data[i] * s;
    }
  });
}

// ---------------------------------------------------------------------------
// linear algebra / shape
// ---------------------------------------------------------------------------

inline Var matmul(const Var& a, const Var& b) {
  AF_CHECK(a->value.rank() == 2 && b->value.rank() == 2, "matmul: rank 2 only");
  const int m = a->value.dim(0), k = a->value.dim(1), n2 = b->value.dim(1);
  AF_CHECK(b->value.dim(0) == k, "matmul: inner dims differ");
  Tensor out({m, n2});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const real av = a->value.at(i, p);
      if (av == 0.0) continue;
      const real* brow = &b->value.data[static_cast<size_t>(p) * n2];
      real* orow = &out.data[static_cast<size_t>(i) * n2];
      for (int j = 0; j < n2; ++j) orow[j] += av * brow[j];
    }
  }
  return make_node(std::move(out), {a, b}, [a, b, m, k, n2](Node& n) {
    if (a->requires_grad) {
      // dA = dOut * B^T
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          real s = 0;
          const real* grow = &n.grad.data[static_cast<size_t>(i) * n2];
          const real* brow = &b->value.data[static_cast<size_t>(p) * n2];
          for (int j = 0; j < n2; ++j) s += grow[j] * brow[j];
          a->grad.at(i, p) += s;
        }
    }
    if (b->requires_grad) {
      // dB = A^T * dOut
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < m; ++i) {
          const real av = a->value.at(i, p);
          if (av == 0.0) continue;
          const real* grow = &n.grad.data[static_cast<size_t>(i) * n2];
          real* brow = &b->grad.data[static_cast<size_t>(p) * n2];
          for (int j = 0; j < n2; ++j) brow[j] += av * grow[j];
        }
    }
  });
}

inline Var transpose2d(const Var& a) {
  AF_CHECK(a->value.rank() == 2, "transpose2d: rank 2 only");
  const int m = a->value.dim(0), k = a->value.dim(1);
  Tensor out({k, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) out.at(j, i) = a->value.at(i, j);
  return make_node(std::move(out), {a}, [a, m, k](Node& n) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) a->grad.at(i, j) += n.grad.at(j, i);
  });
}

inline Var reshape(const Var& a, std::vector<int> shape) {
  AF_CHECK(Tensor::numel_of(shape) == a->value.numel(),
           "reshape: element count mismatch");
  Tensor out(std::move(shape), a->value.data);
  return make_node(std::move(out), {a}, [a](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      a->grad.data[i] += n.grad.data[i];
  });
}

inline Var slice_rows(const Var& a, int start, int len) {
  AF_CHECK(a->value.rank() == 2, "slice_rows: rank 2 only");
  const int T = a->value.dim(0), C = a->value.dim(1);
  AF_CHECK(start >= 0 && len >= 1 && start + len <= T, "slice_rows: bad range");
  Tensor out({len, C});
  std::copy(a->value.data.begin() + static_cast<int64_t>(start) * C,
            a->value.data.begin() + static_cast<int64_t>(start + len) * C,
            out.data.begin());
  return make_node(std::move(out), {a}, [a, start, C](Node& n) {
    const int len2 = n.value.dim(0);
    for (int t = 0; t < len2; ++t)
      for (int c = 0; c < C; ++c) a->grad.at(start + t, c) += n.grad.at(t, c);
  });
}

inline Var slice_cols(const Var& a, int start, int len) {
  AF_CHECK(a->value.rank() == 2, "slice_cols: rank 2 only");
  const int T = a->value.dim(0), C = a->value.dim(1);
  AF_CHECK(start >= 0 && len >= 1 && start + len <= C, "slice_cols: bad range");
  Tensor out({T, len});
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < len; ++c) out.at(t, c) = a->value.at(t, start + c);
  return make_node(std::move(out), {a}, [a, start, T](Node& n) {
    const int len2 = n.value.dim(1);
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < len2; ++c) a->grad.at(t, start + c) += n.grad.at(t, c);
  });
}

inline Var concat_cols(const Var& a, const Var& b) {
  AF_CHECK(a->value.rank() == 2 && b->value.rank() == 2 &&
               a->value.dim(0) == b->value.dim(0),
           "concat_cols: row mismatch");
  const int T = a->value.dim(0), Ca = a->value.dim(1), Cb = b->value.dim(1);
  Tensor out({T, Ca + Cb});
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < Ca; ++c) out.at(t, c) = a->value.at(t, c);
    for (int c = 0; c < Cb; ++c) out.at(t, Ca + c) = b->value.at(t, c);
  }
  return make_node(std::move(out), {a, b}, [a, b, T, Ca, Cb](Node& n) {
    if (a->requires_grad)
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < Ca; ++c) a->grad.at(t, c) += n.grad.at(t, c);
    if (b->requires_grad)
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < Cb; ++c) b->grad.at(t, c) += n.grad.at(t, Ca + c);
  });
}

inline Var concat_rows(const Var& a, const Var& b) {
  AF_CHECK(a->value.rank() == 2 && b->value.rank() == 2 &&
               a->value.dim(1) == b->value.dim(1),
           "concat_rows: col mismatch");
  const int Ta = a->value.dim(0), Tb = b->value.dim(0), C = a->value.dim(1);
  Tensor out({Ta + Tb, C});
  std::copy(a->value.data.begin(), a->value.data.end(), out.data.begin());
  std::copy(b->value.data.begin(), b->value.data.end(),
            out.data.begin() + static_cast<int64_t>(Ta) * C);
  return make_node(std::move(out), {a, b}, [a, b, Ta, Tb, C](Node& n) {
    if (a->requires_grad)
      for (int t = 0; t < Ta; ++t)
        for (int c = 0; c < C; ++c) a->grad.at(t, c) += n.grad.at(t, c);
    if (b->requires_grad)
      for (int t = 0; t < Tb; ++t)
        for (int c = 0; c < C; ++c) b->grad.at(t, c) += n.grad.at(Ta + t, c);
  });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

inline Var sum_all(const Var& a) {
  double s = 0.0;
  for (real v : a->value.data) s += v;
  return make_node(Tensor::scalar(s), {a}, [a](Node& n) {
    const real g = n.grad.data[0];
    for (real& gv : a->grad.data) gv += g;
  });
}

inline Var mean_all(const Var& a) {
  const int64_t n_el = a->value.numel();
  AF_CHECK(n_el > 0, "mean_all: empty tensor");
  double s = 0.0;
  for (real v : a->value.data) s += v;
  s /= static_cast<double>(n_el);
  return make_node(Tensor::scalar(s), {a}, [a, n_el](Node& n) {
    const real g = n.grad.data[0] / static_cast<real>(n_el);
    for (real& gv : a->grad.data) gv += g;
  });
}

// sum over channels, mean over valid frames:
//   (1/|valid|) * sum_{t valid} sum_c x[t,c]
// mask empty means all frames valid.
inline Var masked_frame_mean(const Var& x, const std::vector<char>& mask) {
  AF_CHECK(x->value.rank() == 2, "masked_frame_mean: rank 2 only");
  const int T = x->value.dim(0), C = x->value.dim(1);
  AF_CHECK(mask.empty() || static_cast<int>(mask.size()) == T,
           "masked_frame_mean: mask length mismatch");
  int valid = 0;
  double s = 0.0;
  for (int t = 0; t < T; ++t) {
    if (!mask.empty() && !mask[static_cast<size_t>(t)]) continue;
    ++valid;
    for (int c = 0; c < C; ++c) s += x->value.at(t, c);
  }
  AF_CHECK(valid > 0, "masked_frame_mean: no valid frames");
  s /= valid;
  std::vector<char> m = mask;
  return make_node(Tensor::scalar(s), {x}, [x, m, T, C, valid](Node& n) {
    const real g = n.grad.data[0] / static_cast<real>(valid);
    for (int t = 0; t < T; ++t) {
      if (!m.empty() && !m[static_cast<size_t>(t)]) continue;
      for (int c = 0; c < C; ++c) x->grad.at(t, c) += g;
    }
  });
}

// ---------------------------------------------------------------------------
// nn primitives
// ---------------------------------------------------------------------------

inline Var softmax_rows(const Var& a) {
  AF_CHECK(a->value.rank() == 2, "softmax_rows: rank 2 only");
  const int T = a->value.dim(0), C = a->value.dim(1);
  Tensor out({T, C});
  for (int t = 0; t < T; ++t) {
    real mx = a->value.at(t, 0);
    for (int c = 1; c < C; ++c) mx = std::max(mx, a->value.at(t, c));
    double z = 0.0;
    for (int c = 0; c < C; ++c) {
      const real e = std::exp(a->value.at(t, c) - mx);
      out.at(t, c) = e;
      z += e;
    }
    for (int c = 0; c < C; ++c) out.at(t, c) /= z;
  }
  return make_node(std::move(out), {a}, [a, T, C](Node& n) {
    for (int t = 0; t < T; ++t) {
      double dot = 0.0;
      for (int c = 0; c < C; ++c) dot += n.grad.at(t, c) * n.value.at(t, c);
      for (int c = 0; c < C; ++c)
        a->grad.at(t, c) += n.value.at(t, c) * (n.grad.at(t, c) - dot);
    }
  });
}

inline Var layer_norm(const Var& x, const Var& gain, const Var& bias,
                      real eps = 1e-5) {
  AF_CHECK(x->value.rank() == 2, "layer_norm: rank 2 only");
  const int T = x->value.dim(0), C = x->value.dim(1);
  AF_CHECK(gain->value.numel() == C && bias->value.numel() == C,
           "layer_norm: gain/bias width mismatch");
  Tensor out({T, C});
  std::vector<real> mu(static_cast<size_t>(T)), inv_std(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    double m = 0.0;
    for (int c = 0; c < C; ++c) m += x->value.at(t, c);
    m /= C;
    double v = 0.0;
    for (int c = 0; c < C; ++c) {
      const double d = x->value.at(t, c) - m;
      v += d * d;
    }
    v /= C;
    mu[static_cast<size_t>(t)] = m;
    inv_std[static_cast<size_t>(t)] = 1.0 / std::sqrt(v + eps);
    for (int c = 0; c < C; ++c)
      out.at(t, c) = (x->value.at(t, c) - m) * inv_std[static_cast<size_t>(t)] *
                         gain->value.data[c] +
                     bias->value.data[c];
  }
  return make_node(
      std::move(out), {x, gain, bias}, [x, gain, bias, T, C, mu, inv_std](Node& n) {
        for (int t = 0; t < T; ++t) {
          const real m = mu[static_cast<size_t>(t)];
          const real is = inv_std[static_cast<size_t>(t)];
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (int c = 0; c < C; ++c) {
            const real xhat = (x->value.at(t, c) - m) * is;
            const real dxhat = n.grad.at(t, c) * gain->value.data[c];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            if (gain->requires_grad) gain->grad.data[c] += n.grad.at(t, c) * xhat;
            if (bias->requires_grad) bias->grad.data[c] += n.grad.at(t, c);
          }
          if (x->requires_grad) {
            for (int c = 0; c < C; ++c) {
              const real xhat = (x->value.at(t, c) - m) * is;
              const real dxhat = n.grad.at(t, c) * gain->value.data[c];
              x->grad.at(t, c) +=
                  is * (dxhat - sum_dxhat / C - xhat * sum_dxhat_xhat / C);
            }
          }
        }
      });
}

inline Var dropout(const Var& x, real p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  AF_CHECK(p < 1.0, "dropout: p must be < 1");
  const real keep = 1.0 - p;
  Tensor mask(x->value.shape);
  for (real& m : mask.data) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Tensor out = x->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
  return make_node(std::move(out), {x}, [x, mask](Node& n) {
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      x->grad.data[i] += n.grad.data[i] * mask.data[i];
  });
}

// out[i,:] = table[ids[i],:]
inline Var embedding(const Var& table, const std::vector<int>& ids) {
  AF_CHECK(table->value.rank() == 2, "embedding: table must be rank 2");
  const int V = table->value.dim(0), H = table->value.dim(1);
  const int P = static_cast<int>(ids.size());
  AF_CHECK(P >= 1, "embedding: empty id list");
  Tensor out({P, H});
  for (int i = 0; i < P; ++i) {
    AF_CHECK(ids[static_cast<size_t>(i)] >= 0 && ids[static_cast<size_t>(i)] < V,
             "embedding: id out of range");
    for (int h = 0; h < H; ++h)
      out.at(i, h) = table->value.at(ids[static_cast<size_t>(i)], h);
  }
  std::vector<int> ids_copy = ids;
  return make_node(std::move(out), {table}, [table, ids_copy, H](Node& n) {
    for (size_t i = 0; i < ids_copy.size(); ++i)
      for (int h = 0; h < H; ++h)
        table->grad.at(ids_copy[i], h) += n.grad.at(static_cast<int>(i), h);
  });
}

// out[t,:] = x[idx[t],:]; duplicated indices accumulate in backward
inline Var gather_rows(const Var& x, const std::vector<int>& idx) {
  AF_CHECK(x->value.rank() == 2, "gather_rows: rank 2 only");
  const int P = x->value.dim(0), H = x->value.dim(1);
  const int T = static_cast<int>(idx.size());
  AF_CHECK(T >= 1, "gather_rows: empty index list");
  Tensor out({T, H});
  for (int t = 0; t < T; ++t) {
    AF_CHECK(idx[static_cast<size_t>(t)] >= 0 && idx[static_cast<size_t>(t)] < P,
             "gather_rows: index out of range");
    for (int h = 0; h < H; ++h)
      out.at(t, h) = x->value.at(idx[static_cast<size_t>(t)], h);
  }
  std::vector<int> idx_copy = idx;
  return make_node(std::move(out), {x}, [x, idx_copy, H](Node& n) {
    for (size_t t = 0; t < idx_copy.size(); ++t)
      for (int h = 0; h < H; ++h)
        x->grad.at(idx_copy[t], h) += n.grad.at(static_cast<int>(t), h);
  });
}

// ---------------------------------------------------------------------------
// convolutions (x: [B, C, T])
// ---------------------------------------------------------------------------

inline int conv1d_out_len(int T, int K, int stride, int pad, int dilation) {
  return (T + 2 * pad - dilation * (K - 1) - 1) / stride + 1;
}

inline Var conv1d(const Var& x, const Var& w, const Var& b, int stride = 1,
                  int pad = 0, int dilation = 1, int groups = 1) {
  AF_CHECK(x->value.rank() == 3, "conv1d: x must be [B,C,T]");
  AF_CHECK(w->value.rank() == 3, "conv1d: w must be [Cout,Cin/g,K]");
  const int B = x->value.dim(0), Cin = x->value.dim(1), T = x->value.dim(2);
  const int Cout = w->value.dim(0), Cing = w->value.dim(1), K = w->value.dim(2);
  AF_CHECK(Cin % groups == 0 && Cout % groups == 0 && Cing == Cin / groups,
           "conv1d: group arithmetic mismatch");
  AF_CHECK(b->value.numel() == Cout, "conv1d: bias size mismatch");
  const int To = conv1d_out_len(T, K, stride, pad, dilation);
  AF_CHECK(To >= 1, "conv1d: output would be empty");
  const int cope = Cout / groups;  // channels out per group
  Tensor out({B, Cout, To});
  for (int bb = 0; bb < B; ++bb) {
    for (int co = 0; co < Cout; ++co) {
      const int g = co / cope;
      real* orow = &out.data[(static_cast<size_t>(bb) * Cout + co) * To];
      for (int t = 0; t < To; ++t) orow[t] = b->value.data[co];
      for (int cl = 0; cl < Cing; ++cl) {
        const int ci = g * Cing + cl;
        const real* xrow = &x->value.data[(static_cast<size_t>(bb) * Cin + ci) * T];
        for (int k = 0; k < K; ++k) {
          const real wv = w->value.at(co, cl, k);
          if (wv == 0.0) continue;
          const int off = k * dilation - pad;
          for (int t = 0; t < To; ++t) {
            const int src = t * stride + off;
            if (src >= 0 && src < T) orow[t] += wv * xrow[src];
          }
        }
      }
    }
  }
  return make_node(
      std::move(out), {x, w, b},
      [x, w, b, B, Cin, T, Cout, Cing, K, To, cope, stride, pad,
       dilation](Node& n) {
        for (int bb = 0; bb < B; ++bb) {
          for (int co = 0; co < Cout; ++co) {
            const int g = co / cope;
            const real* grow =
                &n.grad.data[(static_cast<size_t>(bb) * Cout + co) * To];
            if (b->requires_grad) {
              double s = 0;
              for (int t = 0; t < To; ++t) s += grow[t];
              b->grad.data[co] += s;
            }
            for (int cl = 0; cl < Cing; ++cl) {
              const int ci = g * Cing + cl;
              const real* xrow =
                  &x->value.data[(static_cast<size_t>(bb) * Cin + ci) * T];
              real* gxrow =
                  x->requires_grad
                      ? &x->grad.data[(static_cast<size_t>(bb) * Cin + ci) * T]
                      : nullptr;
              for (int k = 0; k < K; ++k) {
                const int off = k * dilation - pad;
                double gw = 0;
                const real wv = w->value.at(co, cl, k);
                for (int t = 0; t < To; ++t) {
                  const int src = t * stride + off;
                  if (src < 0 || src >= T) continue;
                  gw += grow[t] * xrow[src];
                  if (gxrow) gxrow[src] += grow[t] * wv;
                }
                if (w->requires_grad) w->grad.at(co, cl, k) += gw;
              }
            }
          }
        }
      });
}

// w layout: [Cin, Cout, K]
inline Var conv_transpose1d(const Var& x, const Var& w, const Var& b,
                            int stride, int pad, int output_padding = 0) {
  AF_CHECK(x->value.rank() == 3, "conv_transpose1d: x must be [B,C,T]");
  AF_CHECK(w->value.rank() == 3, "conv_transpose1d: w must be [Cin,Cout,K]");
  const int B = x->value.dim(0), Cin = x->value.dim(1), T = x->value.dim(2);
  AF_CHECK(w->value.dim(0) == Cin, "conv_transpose1d: Cin mismatch");
  const int Cout = w->value.dim(1), K = w->value.dim(2);
  AF_CHECK(b->value.numel() == Cout, "conv_transpose1d: bias size mismatch");
  const int To = (T - 1) * stride - 2 * pad + K + output_padding;
  AF_CHECK(To >= 1, "conv_transpose1d: output would be empty");
  Tensor out({B, Cout, To});
  for (int bb = 0; bb < B; ++bb) {
    for (int co = 0; co < Cout; ++co) {
      real* orow = &out.data[(static_cast<size_t>(bb) * Cout + co) * To];
      for (int t = 0; t < To; ++t) orow[t] = b->value.data[co];
    }
    for (int ci = 0; ci < Cin; ++ci) {
      const real* xrow = &x->value.data[(static_cast<size_t>(bb) * Cin + ci) * T];
      for (int co = 0; co < Cout; ++co) {
        real* orow = &out.data[(static_cast<size_t>(bb) * Cout + co) * To];
        for (int k = 0; k < K; ++k) {
          const real wv = w->value.at(ci, co, k);
          if (wv == 0.0) continue;
          for (int t = 0; t < T; ++t) {
            const int dst = t * stride - pad + k;
            if (dst >= 0 && dst < To) orow[dst] += wv * xrow[t];
          }
        }
      }
    }
  }
  return make_node(
      std::move(out), {x, w, b},
      [x, w, b, B, Cin, T, Cout, K, To, stride, pad](Node& n) {
        for (int bb = 0; bb < B; ++bb) {
          if (b->requires_grad) {
            for (int co = 0; co < Cout; ++co) {
              const real* grow =
                  &n.grad.data[(static_cast<size_t>(bb) * Cout + co) * To];
              double s = 0;
              for (int t = 0; t < To; ++t) s += grow[t];
              b->grad.data[co] += s;
            }
          }
          for (int ci = 0; ci < Cin; ++ci) {
            const real* xrow =
                &x->value.data[(static_cast<size_t>(bb) * Cin + ci) * T];
            real* gxrow =
                x->requires_grad
                    ? &x->grad.data[(static_cast<size_t>(bb) * Cin + ci) * T]
                    : nullptr;
            for (int co = 0; co < Cout; ++co) {
              const real* grow =
                  &n.grad.data[(static_cast<size_t>(bb) * Cout + co) * To];
              for (int k = 0; k < K; ++k) {
                const real wv = w->value.at(ci, co, k);
                double gw = 0;
                for (int t = 0; t < T; ++t) {
                  const int dst = t * stride - pad + k;
                  if (dst < 0 || dst >= To) continue;
                  gw += xrow[t] * grow[dst];
                  if (gxrow) gxrow[t] += wv * grow[dst];
                }
                if (w->requires_grad) w->grad.at(ci, co, k) += gw;
              }
            }
          }
        }
      });
}

// count_include_pad semantics: divisor is always the kernel size
inline Var avg_pool1d(const Var& x, int K, int stride, int pad) {
  AF_CHECK(x->value.rank() == 3, "avg_pool1d: x must be [B,C,T]");
  const int B = x->value.dim(0), C = x->value.dim(1), T = x->value.dim(2);
  const int To = (T + 2 * pad - K) / stride + 1;
  AF_CHECK(To >= 1, "avg_pool1d: output would be empty");
  Tensor out({B, C, To});
  for (int bb = 0; bb < B; ++bb)
    for (int c = 0; c < C; ++c) {
      const real* xrow = &x->value.data[(static_cast<size_t>(bb) * C + c) * T];
      real* orow = &out.data[(static_cast<size_t>(bb) * C + c) * To];
      for (int t = 0; t < To; ++t) {
        double s = 0;
        for (int k = 0; k < K; ++k) {
          const int src = t * stride - pad + k;
          if (src >= 0 && src < T) s += xrow[src];
        }
        orow[t] = s / K;
      }
    }
  return make_node(std::move(out), {x}, [x, B, C, T, To, K, stride, pad](Node& n) {
    for (int bb = 0; bb < B; ++bb)
      for (int c = 0; c < C; ++c) {
        real* gxrow = &x->grad.data[(static_cast<size_t>(bb) * C + c) * T];
        const real* grow = &n.grad.data[(static_cast<size_t>(bb) * C + c) * To];
        for (int t = 0; t < To; ++t) {
          const real g = grow[t] / K;
          for (int k = 0; k < K; ++k) {
            const int src = t * stride - pad + k;
            if (src >= 0 && src < T) gxrow[src] += g;
          }
        }
      }
  });
}

// ---------------------------------------------------------------------------
// convenience
// ---------------------------------------------------------------------------

// (T,C) sequence -> (1,C,T) conv layout
inline Var seq_to_conv(const Var& x) {
  AF_CHECK(x->value.rank() == 2, "seq_to_conv: rank 2 only");
  const int T = x->value.dim(0), C = x->value.dim(1);
  return reshape(transpose2d(x), {1, C, T});
}

// (1,C,T) conv layout -> (T,C)
inline Var conv_to_seq(const Var& x) {
  AF_CHECK(x->value.rank() == 3 && x->value.dim(0) == 1,
           "conv_to_seq: expected [1,C,T]");
  const int C = x->value.dim(1), T = x->value.dim(2);
  return transpose2d(reshape(x, {C, T}));
}

inline Var add_many(const std::vector<Var>& terms) {
  AF_CHECK(!terms.empty(), "add_many: empty");
  Var acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

}  // namespace ag
}  // namespace af
