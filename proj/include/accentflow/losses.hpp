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

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "accentflow/model.hpp"

namespace af {

// Closed-form diagonal-Gaussian KL(q || p): sum over channels, mean over
// valid frames. Zero when q == p.
inline ag::Var kl_gauss(const GaussianVar& q, const GaussianVar& p,
                        const std::vector<char>& mask = {}) {
  AF_CHECK(q.mean->value.same_shape(p.mean->value) &&
               q.log_var->value.same_shape(p.log_var->value) &&
               q.mean->value.same_shape(q.log_var->value),
           "kl_gauss: shape mismatch");
  // var_ratio as exp(lv_q - lv_p) keeps kl(q, q) = 0 exact in floating point
  ag::Var diff = ag::sub(q.mean, p.mean);
  ag::Var var_ratio = ag::exp_(ag::sub(q.log_var, p.log_var));
  ag::Var maha = ag::mul(ag::square(diff), ag::exp_(ag::neg(p.log_var)));
  ag::Var term = ag::add_scalar(
      ag::add(ag::mul_scalar(ag::sub(p.log_var, q.log_var), 0.5),
              ag::mul_scalar(ag::add(var_ratio, maha), 0.5)),
      -0.5);
  return ag::masked_frame_mean(term, mask);
}

inline real kl_gauss_value(const Tensor& q_mean, const Tensor& q_log_var,
                           const Tensor& p_mean, const Tensor& p_log_var,
                           const std::vector<char>& mask = {}) {
  GaussianVar q{ag::constant(q_mean), ag::constant(q_log_var)};
  GaussianVar p{ag::constant(p_mean), ag::constant(p_log_var)};
  return ag::scalar_value(kl_gauss(q, p, mask));
}

// Single-sample estimate of KL(q(z_ac|y) || p(z_ac|...)) through the flow:
//   mean_t sum_c [ log q(z) - log p(f(z)) ] - log_det
// log_det is the frame-averaged total log|det df/dz| (Gaussian constants
// cancel between the two densities).
inline ag::Var kl_ac_with_flow(const ag::Var& z_sample, const GaussianVar& q,
                               const ag::Var& fz, const GaussianVar& prior,
                               const ag::Var& log_det_frame_mean,
                               const std::vector<char>& mask = {}) {
  AF_CHECK(z_sample->value.same_shape(q.mean->value) &&
               fz->value.same_shape(prior.mean->value) &&
               z_sample->value.same_shape(fz->value),
           "kl_ac_with_flow: shape mismatch");
  // -2 log N(x; mu, lv) = log(2pi) + lv + (x-mu)^2 exp(-lv)
  ag::Var dq = ag::sub(z_sample, q.mean);
  ag::Var log_q_term = ag::add(q.log_var,
                               ag::mul(ag::square(dq), ag::exp_(ag::neg(q.log_var))));
  ag::Var dp = ag::sub(fz, prior.mean);
  ag::Var log_p_term = ag::add(
      prior.log_var, ag::mul(ag::square(dp), ag::exp_(ag::neg(prior.log_var))));
  ag::Var gap = ag::mul_scalar(ag::sub(log_p_term, log_q_term), 0.5);
  return ag::sub(ag::masked_frame_mean(gap, mask), log_det_frame_mean);
}

// L1 distance between the mel spectra of two equal-length waveform segments.
inline ag::Var recon_loss(const ag::Var& y_hat, const ag::Var& y) {
  AF_CHECK(y_hat->value.numel() == y->value.numel(),
           "recon_loss: waveform length mismatch");
  return ag::mean_all(ag::abs_(ag::sub(mel_op(y_hat), mel_op(y))));
}

// Least-squares GAN objectives, summed over sub-discriminators.
inline ag::Var adv_g(const std::vector<ag::Var>& fake_scores) {
  AF_CHECK(!fake_scores.empty(), "adv_g: empty score list");
  std::vector<ag::Var> terms;
  for (const auto& s : fake_scores)
    terms.push_back(ag::mean_all(ag::square(ag::add_scalar(s, -1.0))));
  return ag::add_many(terms);
}

inline ag::Var adv_d(const std::vector<ag::Var>& real_scores,
                     const std::vector<ag::Var>& fake_scores) {
  AF_CHECK(!real_scores.empty() && real_scores.size() == fake_scores.size(),
           "adv_d: score list mismatch");
  std::vector<ag::Var> terms;
  for (size_t i = 0; i < real_scores.size(); ++i) {
    terms.push_back(
        ag::mean_all(ag::square(ag::add_scalar(real_scores[i], -1.0))));
    terms.push_back(ag::mean_all(ag::square(fake_scores[i])));
  }
  return ag::add_many(terms);
}

// Sum over sub-discriminators and layers of mean |real - fake|; the real
// features are treated as constants.
inline ag::Var feature_matching(const std::vector<DiscOutput>& real,
                                const std::vector<DiscOutput>& fake) {
  AF_CHECK(real.size() == fake.size() && !real.empty(),
           "feature_matching: discriminator count mismatch");
  std::vector<ag::Var> terms;
  for (size_t d = 0; d < real.size(); ++d) {
    AF_CHECK(real[d].features.size() == fake[d].features.size(),
             "feature_matching: layer count mismatch");
    for (size_t l = 0; l < real[d].features.size(); ++l)
      terms.push_back(ag::mean_all(ag::abs_(
          ag::sub(ag::detach(real[d].features[l]), fake[d].features[l]))));
  }
  return ag::add_many(terms);
}

// MSE in the linear frame domain.
inline ag::Var duration_loss(const ag::Var& d_hat, const ag::Var& d) {
  AF_CHECK(d_hat->value.numel() == d->value.numel(),
           "duration_loss: length mismatch");
  return ag::mean_all(ag::square(ag::sub(d_hat, d)));
}

inline ag::Var mse_loss(const ag::Var& a, const ag::Var& b) {
  AF_CHECK(a->value.same_shape(b->value), "mse_loss: shape mismatch");
  return ag::mean_all(ag::square(ag::sub(a, b)));
}

// One optimization step's scalar objective values. kl_pr and mse_bn are
// present only in the modes whose wiring defines them.
struct LossParts {
  real recon = 0, kl_ac = 0, adv_g = 0, adv_d = 0, fm = 0, dur = 0;
  std::optional<real> kl_pr;
  std::optional<real> mse_bn;
};

struct LossReport {
  int64_t step = 0;
  real recon = 0, kl_ac = 0, adv_g = 0, adv_d = 0, fm = 0, dur = 0;
  std::optional<real> kl_pr;
  std::optional<real> mse_bn;
  real alpha = 45.0, lambda_dur = 1.0;
  real total_g = 0, total_d = 0;

  std::string to_json_line() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"step\":" << step << ",\"recon\":" << recon;
    if (kl_pr) os << ",\"kl_pr\":" << *kl_pr;
    if (mse_bn) os << ",\"mse_bn\":" << *mse_bn;
    os << ",\"kl_ac\":" << kl_ac << ",\"adv_g\":" << adv_g
       << ",\"adv_d\":" << adv_d << ",\"fm\":" << fm << ",\"dur\":" << dur
       << ",\"total_g\":" << total_g << ",\"total_d\":" << total_d << "}";
    return os.str();
  }

  bool bitwise_equal(const LossReport& o) const {
    return step == o.step && recon == o.recon && kl_ac == o.kl_ac &&
           adv_g == o.adv_g && adv_d == o.adv_d && fm == o.fm && dur == o.dur &&
           kl_pr == o.kl_pr && mse_bn == o.mse_bn && total_g == o.total_g &&
           total_d == o.total_d;
  }
};

// Final objective composition. The generator total is
//   adv_g + fm + (alpha*recon + prior terms + kl_ac) + lambda*dur
// and the discriminator total is adv_d alone.
inline LossReport compose(const LossParts& parts, real alpha, real lambda_dur) {
  auto require_finite = [](real v, const char* name) {
    AF_CHECK(std::isfinite(v), std::string("non-finite loss term: ") + name);
  };
  require_finite(parts.recon, "recon");
  require_finite(parts.kl_ac, "kl_ac");
  require_finite(parts.adv_g, "adv_g");
  require_finite(parts.adv_d, "adv_d");
  require_finite(parts.fm, "fm");
  require_finite(parts.dur, "dur");
  if (parts.kl_pr) require_finite(*parts.kl_pr, "kl_pr");
  if (parts.mse_bn) require_finite(*parts.mse_bn, "mse_bn");

  LossReport r;
  r.recon = parts.recon;
  r.kl_ac = parts.kl_ac;
  r.adv_g = parts.adv_g;
  r.adv_d = parts.adv_d;
  r.fm = parts.fm;
  r.dur = parts.dur;
  r.kl_pr = parts.kl_pr;
  r.mse_bn = parts.mse_bn;
  r.alpha = alpha;
  r.lambda_dur = lambda_dur;
  r.total_g = parts.adv_g + parts.fm + alpha * parts.recon +
              (parts.kl_pr ? *parts.kl_pr : 0.0) +
              (parts.mse_bn ? *parts.mse_bn : 0.0) + parts.kl_ac +
              lambda_dur * parts.dur;
  r.total_d = parts.adv_d;
  return r;
}

}  // namespace af
