#include "dualtune/model/transcriber.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dualtune/common/digest.hpp"
#include "dualtune/numerics/ops.hpp"

namespace dualtune {

using num::Tensor;

void ModelConfig::validate() const {
  if (hidden_dim == 0 || num_heads == 0 || hidden_dim % num_heads != 0) {
    throw num::ContractError("hidden_dim " + std::to_string(hidden_dim) +
                             " must be a positive multiple of num_heads " +
                             std::to_string(num_heads));
  }
  if (vocab_size < 4) throw num::ContractError("vocab_size must be >= 4");
  if (max_audio_frames < 1) throw num::ContractError("max_audio_frames must be >= 1");
  if (max_token_len < 2) throw num::ContractError("max_token_len must be >= 2");
  if (feature_dim == 0 || mlp_dim == 0) {
    throw num::ContractError("feature_dim and mlp_dim must be positive");
  }
}

namespace {

Tensor sinusoid_table(std::size_t length, std::size_t dim) {
  std::vector<double> v(length * dim);
  const std::size_t half = dim / 2;
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < half; ++i) {
      const double rate =
          std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
      v[t * dim + i] = std::sin(static_cast<double>(t) * rate);
      v[t * dim + half + i] = std::cos(static_cast<double>(t) * rate);
    }
  }
  return Tensor::from({length, dim}, std::move(v));
}

}  // namespace

TranscriberModel::TranscriberModel(ModelConfig config, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed) {
  config_.validate();
  Rng rng(init_seed);
  const auto h = config_.hidden_dim;
  const auto inv = [](std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };

  encoder_positions_ = sinusoid_table(config_.max_audio_frames, h);

  in_w_ = param("enc.in.weight", {h, config_.feature_dim}, inv(config_.feature_dim), 0.0, rng);
  in_b_ = param("enc.in.bias", {h}, 0.0, 0.0, rng);
  for (std::size_t i = 0; i < config_.encoder_layers; ++i) {
    const auto p = "enc." + std::to_string(i);
    EncoderBlock block;
    block.ln1 = make_layer_norm(p + ".ln1", rng);
    block.attn = make_attention(p + ".attn", rng);
    block.ln2 = make_layer_norm(p + ".ln2", rng);
    block.mlp = make_mlp(p + ".mlp", rng);
    encoder_.push_back(std::move(block));
  }
  enc_ln_post_ = make_layer_norm("enc.ln_post", rng);

  tok_emb_ = param("dec.tok_emb", {config_.vocab_size, h}, 0.5, 0.0, rng);
  pos_emb_ = param("dec.pos_emb", {config_.max_token_len, h}, 0.1, 0.0, rng);
  for (std::size_t i = 0; i < config_.decoder_layers; ++i) {
    const auto p = "dec." + std::to_string(i);
    DecoderBlock block;
    block.ln1 = make_layer_norm(p + ".ln1", rng);
    block.self_attn = make_attention(p + ".self_attn", rng);
    block.ln2 = make_layer_norm(p + ".ln2", rng);
    block.cross_attn = make_attention(p + ".cross_attn", rng);
    block.ln3 = make_layer_norm(p + ".ln3", rng);
    block.mlp = make_mlp(p + ".mlp", rng);
    decoder_.push_back(std::move(block));
  }
  dec_ln_post_ = make_layer_norm("dec.ln_post", rng);
  out_w_ = param("dec.out.weight", {config_.vocab_size, h}, inv(h), 0.0, rng);
  out_b_ = param("dec.out.bias", {config_.vocab_size}, 0.0, 0.0, rng);

  set_phase(Phase::Pretrain);
}

Tensor TranscriberModel::param(const std::string& name, num::Shape shape, double stddev,
                               double fill, Rng& rng) {
  std::vector<double> v(num::numel(shape), fill);
  if (stddev > 0.0) {
    for (auto& x : v) x = rng.normal(0.0, stddev);
  }
  auto t = Tensor::from(std::move(shape), std::move(v));
  base_.push_back({name, t});
  return t;
}

TranscriberModel::AttentionWeights TranscriberModel::make_attention(const std::string& id,
                                                                    Rng& rng) {
  const auto h = config_.hidden_dim;
  const double sd = 1.0 / std::sqrt(static_cast<double>(h));
  AttentionWeights w;
  w.id = id;
  w.wq = param(id + ".q.weight", {h, h}, sd, 0.0, rng);
  w.bq = param(id + ".q.bias", {h}, 0.0, 0.0, rng);
  w.wk = param(id + ".k.weight", {h, h}, sd, 0.0, rng);
  w.wv = param(id + ".v.weight", {h, h}, sd, 0.0, rng);
  w.bv = param(id + ".v.bias", {h}, 0.0, 0.0, rng);
  w.wo = param(id + ".o.weight", {h, h}, sd, 0.0, rng);
  w.bo = param(id + ".o.bias", {h}, 0.0, 0.0, rng);
  return w;
}

TranscriberModel::LayerNormWeights TranscriberModel::make_layer_norm(const std::string& id,
                                                                     Rng& rng) {
  const auto h = config_.hidden_dim;
  return {param(id + ".gain", {h}, 0.0, 1.0, rng), param(id + ".bias", {h}, 0.0, 0.0, rng)};
}

TranscriberModel::MlpWeights TranscriberModel::make_mlp(const std::string& id, Rng& rng) {
  const auto h = config_.hidden_dim, m = config_.mlp_dim;
  MlpWeights w;
  w.w1 = param(id + ".fc1.weight", {m, h}, 1.0 / std::sqrt(static_cast<double>(h)), 0.0, rng);
  w.b1 = param(id + ".fc1.bias", {m}, 0.0, 0.0, rng);
  w.w2 = param(id + ".fc2.weight", {h, m}, 1.0 / std::sqrt(static_cast<double>(m)), 0.0, rng);
  w.b2 = param(id + ".fc2.bias", {h}, 0.0, 0.0, rng);
  return w;
}

TranscriberModel TranscriberModel::clone() const {
  TranscriberModel copy(config_, init_seed_);
  for (std::size_t i = 0; i < base_.size(); ++i) {
    auto src = base_[i].tensor.values();
    auto dst = copy.base_[i].tensor.mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
    copy.base_[i].tensor.set_requires_grad(base_[i].tensor.requires_grad());
  }
  copy.lora_ = lora_;
  for (const auto& [id, a] : adapters_) copy.adapters_.emplace(id, a.clone());
  return copy;
}

std::vector<std::string> TranscriberModel::adapter_targets() const {
  std::vector<std::string> ids;
  const auto add = [&ids](const AttentionWeights& w) {
    ids.push_back(w.id + ".q");
    ids.push_back(w.id + ".v");
  };
  for (const auto& b : encoder_) add(b.attn);
  for (const auto& b : decoder_) {
    add(b.self_attn);
    add(b.cross_attn);
  }
  return ids;
}

void TranscriberModel::attach_adapters(const LoraConfig& lora, std::uint64_t seed) {
  lora.validate();
  Rng rng(seed);
  adapters_.clear();
  const auto h = config_.hidden_dim;
  for (const auto& id : adapter_targets()) {
    adapters_.emplace(id, LoraAdapter::create(h, h, lora, rng));
  }
  lora_ = lora;
  set_phase(Phase::Finetune);
}

void TranscriberModel::set_adapter(const std::string& target, LoraAdapter adapter,
                                   const LoraConfig& lora) {
  const auto targets = adapter_targets();
  if (std::find(targets.begin(), targets.end(), target) == targets.end()) {
    throw num::ContractError("unknown adapter target '" + target + "'");
  }
  const auto h = config_.hidden_dim;
  if (adapter.d_in() != h || adapter.d_out() != h || adapter.rank != lora.rank) {
    throw num::DimensionError("adapter for '" + target + "' has the wrong shape");
  }
  lora_ = lora;
  adapters_.insert_or_assign(target, std::move(adapter));
}

Tensor TranscriberModel::base_parameter(std::string_view name) const {
  for (const auto& p : base_) {
    if (p.name == name) return p.tensor;
  }
  throw num::ContractError("no base parameter named '" + std::string(name) + "'");
}

std::vector<Tensor> TranscriberModel::trainable_parameters(Phase phase) const {
  std::vector<Tensor> out;
  if (phase == Phase::Pretrain) {
    for (const auto& p : base_) out.push_back(p.tensor);
  } else {
    for (const auto& [id, a] : adapters_) {
      out.push_back(a.a);
      out.push_back(a.b);
    }
  }
  return out;
}

void TranscriberModel::set_phase(Phase phase) {
  for (auto& p : base_) p.tensor.set_requires_grad(phase == Phase::Pretrain);
  for (auto& [id, a] : adapters_) {
    a.a.set_requires_grad(phase == Phase::Finetune);
    a.b.set_requires_grad(phase == Phase::Finetune);
  }
}

const LoraAdapter* TranscriberModel::adapter(const std::string& id) const {
  auto it = adapters_.find(id);
  return it == adapters_.end() ? nullptr : &it->second;
}

Tensor TranscriberModel::attend(const AttentionWeights& w, const Tensor& x_query,
                                const Tensor& x_memory, bool causal,
                                const std::vector<bool>& key_mask,
                                const ForwardMode& mode) const {
  Tensor q = lora_linear(adapter(w.id + ".q"), w.wq, w.bq, x_query, mode);
  Tensor k = num::linear(x_memory, w.wk);
  Tensor v = lora_linear(adapter(w.id + ".v"), w.wv, w.bv, x_memory, mode);
  Tensor o = num::attention(q, k, v, config_.num_heads, causal, key_mask);
  return num::linear(o, w.wo, w.bo);
}

Tensor TranscriberModel::feed_forward(const MlpWeights& w, const Tensor& x) const {
  return num::linear(num::gelu(num::linear(x, w.w1, w.b1)), w.w2, w.b2);
}

EncoderOutput TranscriberModel::encode(const Tensor& features, const ForwardMode& mode) const {
  if (!features.defined() || features.rank() != 2 || features.cols() != config_.feature_dim) {
    throw num::DimensionError("encode: expected [frames x " +
                              std::to_string(config_.feature_dim) + "] features, got " +
                              (features.defined() ? num::shape_string(features.shape())
                                                  : std::string("undefined")));
  }
  const auto frames = features.rows();
  if (frames == 0) throw num::ContractError("encode: no input frames");
  if (frames > config_.max_audio_frames) {
    throw num::ContractError("encode: " + std::to_string(frames) + " frames exceed the " +
                             std::to_string(config_.max_audio_frames) +
                             "-frame context; split the input into windows (longform_decode)");
  }
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw num::ContractError("encode: non-finite input feature");
  }

  std::vector<bool> mask(frames, true);
  Tensor x = num::gelu(num::linear(features, in_w_, in_b_));
  x = num::add(x, num::slice_rows(encoder_positions_, 0, frames));
  for (const auto& block : encoder_) {
    Tensor h = num::layer_norm(x, block.ln1.gain, block.ln1.bias);
    x = num::add(x, attend(block.attn, h, h, false, mask, mode));
    h = num::layer_norm(x, block.ln2.gain, block.ln2.bias);
    x = num::add(x, feed_forward(block.mlp, h));
  }
  x = num::layer_norm(x, enc_ln_post_.gain, enc_ln_post_.bias);
  return {x, std::move(mask)};
}

Tensor TranscriberModel::decoder_forward(const EncoderOutput& encoded,
                                         std::span<const int> tokens_in,
                                         const ForwardMode& mode) const {
  if (tokens_in.empty() || tokens_in.front() != tokens::kBos) {
    throw num::ContractError("decoder_forward: token input must start with BOS");
  }
  if (tokens_in.size() > config_.max_token_len) {
    throw num::ContractError("decoder_forward: " + std::to_string(tokens_in.size()) +
                             " tokens exceed max_token_len " +
                             std::to_string(config_.max_token_len));
  }
  const auto len = tokens_in.size();
  Tensor x = num::add(num::embedding(tok_emb_, tokens_in), num::slice_rows(pos_emb_, 0, len));
  for (const auto& block : decoder_) {
    Tensor h = num::layer_norm(x, block.ln1.gain, block.ln1.bias);
    x = num::add(x, attend(block.self_attn, h, h, true, {}, mode));
    h = num::layer_norm(x, block.ln2.gain, block.ln2.bias);
    x = num::add(x, attend(block.cross_attn, h, encoded.features, false, encoded.mask, mode));
    h = num::layer_norm(x, block.ln3.gain, block.ln3.bias);
    x = num::add(x, feed_forward(block.mlp, h));
  }
  x = num::layer_norm(x, dec_ln_post_.gain, dec_ln_post_.bias);
  return num::linear(x, out_w_, out_b_);
}

std::string TranscriberModel::base_digest() const {
  Sha256 sha;
  for (const auto& p : base_) {
    sha.update(p.name);
    sha.update(static_cast<std::uint64_t>(p.tensor.rank()));
    for (auto d : p.tensor.shape()) sha.update(static_cast<std::uint64_t>(d));
    sha.update(p.tensor.values());
  }
  return sha.finish();
}

TranscriberModel TranscriberModel::merged() const {
  TranscriberModel out = clone();
  for (const auto& [id, a] : adapters_) {
    // id is "<attention id>.q" or ".v"; the weight lives at "<id>.weight".
    Tensor w = out.base_parameter(id + ".weight");
    Tensor d = a.delta();
    auto wv = w.mutable_values();
    auto dv = d.values();
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] += dv[i];
  }
  out.adapters_.clear();
  out.lora_.reset();
  out.set_phase(Phase::Pretrain);
  return out;
}

}  // namespace dualtune
