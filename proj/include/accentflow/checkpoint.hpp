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

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "accentflow/losses.hpp"
#include "accentflow/model.hpp"
#include "accentflow/optim.hpp"

namespace af {

using nlohmann::json;

inline json model_config_to_json(const ModelConfig& c) {
  return json{{"hidden", c.hidden},
              {"latent", c.latent},
              {"speaker_dim", c.speaker_dim},
              {"num_speakers", c.num_speakers},
              {"vocab_size", c.vocab_size},
              {"text_blocks", c.text_blocks},
              {"prior_blocks", c.prior_blocks},
              {"attn_heads", c.attn_heads},
              {"ffn_mult", c.ffn_mult},
              {"ffn_kernel", c.ffn_kernel},
              {"enc_layers", c.enc_layers},
              {"enc_kernel", c.enc_kernel},
              {"p_dropout", c.p_dropout},
              {"flow_layers", c.flow_layers},
              {"flow_hidden", c.flow_hidden},
              {"flow_kernel", c.flow_kernel},
              {"flow_volume_preserving", c.flow_volume_preserving},
              {"decoder_channels", c.decoder_channels},
              {"upsample_factors", c.upsample_factors},
              {"upsample_kernels", c.upsample_kernels},
              {"resblock_kernels", c.resblock_kernels},
              {"resblock_dilations", c.resblock_dilations},
              {"mpd_periods", c.mpd_periods},
              {"mpd_channels", c.mpd_channels},
              {"msd_scales", c.msd_scales},
              {"msd_channels", c.msd_channels},
              {"ablation", to_string(c.ablation)}};
}

inline ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.hidden = j.at("hidden");
  c.latent = j.at("latent");
  c.speaker_dim = j.at("speaker_dim");
  c.num_speakers = j.at("num_speakers");
  c.vocab_size = j.at("vocab_size");
  c.text_blocks = j.at("text_blocks");
  c.prior_blocks = j.at("prior_blocks");
  c.attn_heads = j.at("attn_heads");
  c.ffn_mult = j.at("ffn_mult");
  c.ffn_kernel = j.at("ffn_kernel");
  c.enc_layers = j.at("enc_layers");
  c.enc_kernel = j.at("enc_kernel");
  c.p_dropout = j.at("p_dropout");
  c.flow_layers = j.at("flow_layers");
  c.flow_hidden = j.at("flow_hidden");
  c.flow_kernel = j.at("flow_kernel");
  c.flow_volume_preserving = j.at("flow_volume_preserving");
  c.decoder_channels = j.at("decoder_channels");
  c.upsample_factors = j.at("upsample_factors").get<std::vector<int>>();
  c.upsample_kernels = j.at("upsample_kernels").get<std::vector<int>>();
  c.resblock_kernels = j.at("resblock_kernels").get<std::vector<int>>();
  c.resblock_dilations = j.at("resblock_dilations").get<std::vector<int>>();
  c.mpd_periods = j.at("mpd_periods").get<std::vector<int>>();
  c.mpd_channels = j.at("mpd_channels").get<std::vector<int>>();
  c.msd_scales = j.at("msd_scales");
  c.msd_channels = j.at("msd_channels").get<std::vector<int>>();
  c.ablation = ablation_from_string(j.at("ablation"));
  return c;
}

inline json frontend_to_json(const AccentRegistry& registry,
                             const std::vector<std::string>& speakers) {
  json accents = json::array();
  for (const auto& inv : registry.inventories()) {
    json rules = json::array();
    for (const auto& [ch, id] : registry.rules(inv.accent.index))
      rules.push_back({ch, registry.decode(id).second});
    accents.push_back({{"name", inv.accent.name},
                       {"symbols", inv.symbols},
                       {"rules", rules}});
  }
  return json{{"accents", accents}, {"speakers", speakers}};
}

inline AccentRegistry registry_from_json(const json& j,
                                         std::vector<std::string>* speakers) {
  AccentRegistry reg;
  for (const auto& a : j.at("accents")) {
    reg.register_inventory(a.at("name"),
                           a.at("symbols").get<std::vector<std::string>>());
    for (const auto& r : a.at("rules"))
      reg.add_g2p_rule(a.at("name"), r.at(0), r.at(1));
  }
  reg.freeze();
  if (speakers) *speakers = j.at("speakers").get<std::vector<std::string>>();
  return reg;
}

// Checkpoint container (see docs/formats.md): "AFCK", version, step, a JSON
// metadata blob, then named tensors as little-endian float32 payloads.
namespace ckpt_detail {

constexpr uint32_t kMagic = 0x4b434641;  // "AFCK"
constexpr uint32_t kVersion = 1;

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline uint32_t get_u32(const std::string& s, size_t& pos) {
  AF_CHECK(pos + 4 <= s.size(), "checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  return v;
}
inline uint64_t get_u64(const std::string& s, size_t& pos) {
  AF_CHECK(pos + 8 <= s.size(), "checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  return v;
}

inline void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  for (real v : t.data) {
    const float f = static_cast<float>(v);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

// rounds a live tensor to its stored float32 values
inline void quantize_f32(Tensor& t) {
  for (real& v : t.data) v = static_cast<float>(v);
}

}  // namespace ckpt_detail

struct CheckpointData {
  int64_t step = 0;
  ModelConfig config;
  json metadata;
  std::map<std::string, Tensor> tensors;
};

// Serializes parameters and optimizer state. Live values are rounded to the
// float32 payload precision so that a subsequent load reproduces them bit
// for bit and resumed runs match continued ones.
inline void save_checkpoint(const std::string& path, AccentModel& model,
                            Adam* opt_g, Adam* opt_d, int64_t step,
                            const json& frontend_meta) {
  json meta;
  meta["config"] = model_config_to_json(model.cfg);
  meta["frontend"] = frontend_meta;
  meta["optim"] = json::object();
  if (opt_g) meta["optim"]["g_step"] = opt_g->step_count();
  if (opt_d) meta["optim"]["d_step"] = opt_d->step_count();

  std::string out;
  ckpt_detail::put_u32(out, ckpt_detail::kMagic);
  ckpt_detail::put_u32(out, ckpt_detail::kVersion);
  ckpt_detail::put_u64(out, static_cast<uint64_t>(step));
  const std::string meta_str = meta.dump();
  ckpt_detail::put_u32(out, static_cast<uint32_t>(meta_str.size()));
  out.append(meta_str);

  std::vector<std::pair<std::string, Tensor*>> entries;
  for (auto& [name, p] : model.all_params())
    entries.push_back({"model." + name, &p->value});
  auto add_optim = [&entries](const std::string& prefix, Adam* opt) {
    if (!opt) return;
    const auto& params = opt->params();
    for (size_t i = 0; i < params.size(); ++i) {
      entries.push_back({prefix + ".m." + params[i].first, &opt->moment1()[i]});
      entries.push_back({prefix + ".v." + params[i].first, &opt->moment2()[i]});
    }
  };
  add_optim("optim_g", opt_g);
  add_optim("optim_d", opt_d);

  ckpt_detail::put_u32(out, static_cast<uint32_t>(entries.size()));
  for (auto& [name, tensor] : entries) {
    ckpt_detail::quantize_f32(*tensor);
    ckpt_detail::put_tensor(out, name, *tensor);
  }
  write_file_atomic(path, out);
}

inline CheckpointData load_checkpoint_file(const std::string& path) {
  const std::string s = read_text_file(path);
  size_t pos = 0;
  AF_CHECK(ckpt_detail::get_u32(s, pos) == ckpt_detail::kMagic,
           "checkpoint: bad magic: " + path);
  AF_CHECK(ckpt_detail::get_u32(s, pos) == ckpt_detail::kVersion,
           "checkpoint: unsupported version: " + path);
  CheckpointData data;
  data.step = static_cast<int64_t>(ckpt_detail::get_u64(s, pos));
  const uint32_t meta_len = ckpt_detail::get_u32(s, pos);
  AF_CHECK(pos + meta_len <= s.size(), "checkpoint: truncated metadata");
  data.metadata = json::parse(s.substr(pos, meta_len));
  pos += meta_len;
  data.config = model_config_from_json(data.metadata.at("config"));

  const uint32_t n = ckpt_detail::get_u32(s, pos);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t name_len = ckpt_detail::get_u32(s, pos);
    AF_CHECK(pos + name_len <= s.size(), "checkpoint: truncated tensor name");
    const std::string name = s.substr(pos, name_len);
    pos += name_len;
    const uint32_t ndim = ckpt_detail::get_u32(s, pos);
    std::vector<int> shape;
    for (uint32_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<int>(ckpt_detail::get_u32(s, pos)));
    Tensor t(shape);
    for (real& v : t.data) {
      const uint32_t bits = ckpt_detail::get_u32(s, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      v = f;
    }
    data.tensors.emplace(name, std::move(t));
  }
  return data;
}

// Restores model parameters (and optimizer state when optimizers are given).
// The stored ModelConfig must match the live one exactly.
inline void apply_checkpoint(const CheckpointData& data, AccentModel& model,
                             Adam* opt_g = nullptr, Adam* opt_d = nullptr) {
  AF_CHECK(data.config == model.cfg,
           "checkpoint: ModelConfig does not match the live model");
  auto restore = [&data](const std::string& name, Tensor& dst) {
    const auto it = data.tensors.find(name);
    AF_CHECK(it != data.tensors.end(), "checkpoint: missing tensor " + name);
    AF_CHECK(it->second.shape == dst.shape,
             "checkpoint: shape mismatch for " + name);
    dst.data = it->second.data;
  };
  for (auto& [name, p] : model.all_params()) restore("model." + name, p->value);
  auto restore_optim = [&](const std::string& prefix, Adam* opt,
                           const char* key) {
    if (!opt) return;
    const auto& params = opt->params();
    for (size_t i = 0; i < params.size(); ++i) {
      restore(prefix + ".m." + params[i].first, opt->moment1()[i]);
      restore(prefix + ".v." + params[i].first, opt->moment2()[i]);
    }
    opt->set_step_count(data.metadata.at("optim").at(key).get<int64_t>());
  };
  restore_optim("optim_g", opt_g, "g_step");
  restore_optim("optim_d", opt_d, "d_step");
}

}  // namespace af
