// SPDX-License-Identifier: Apache-2.0
#include "deco/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <json.hpp>

#include "binary_io.hpp"
#include "deco/error.hpp"
#include "deco/kernels.hpp"
#include "deco/rng.hpp"

namespace deco {

namespace {

constexpr float kNormEps = 1e-5f;
constexpr std::uint32_t kMlpRatio = 4;

float gelu(float x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2 / pi)
  return 0.5f * x * (1.0f + std::tanh(kC * (x + 0.044715f * x * x * x)));
}

void fill_uniform(std::vector<float>& t, Rng& rng, double scale) {
  for (float& v : t) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * scale);
}

}  // namespace

void ToyModelConfig::validate() const {
  if (num_layers < 2) throw InvalidInput("toy config: num_layers must be >= 2");
  if (vocab_size < 8) throw InvalidInput("toy config: vocab_size must be >= 8");
  if (num_heads == 0 || hidden_dim == 0 || hidden_dim % num_heads != 0) {
    throw InvalidInput("toy config: hidden_dim must be a positive multiple of num_heads");
  }
  if (max_seq_len == 0) throw InvalidInput("toy config: max_seq_len must be positive");
  if (visual_vocab_size == 0) throw InvalidInput("toy config: visual_vocab_size must be positive");
}

// ---------------------------------------------------------------------------

class ToyModel::ToySession final : public Session {
 public:
  explicit ToySession(const ToyModel& model) : model_(model) {
    const auto& c = model.config_;
    keys_.assign(c.num_layers, std::vector<float>(std::size_t{c.max_seq_len} * c.hidden_dim));
    values_ = keys_;
    last_hidden_.assign(std::size_t{c.num_layers} * c.hidden_dim, 0.0f);
  }

  void push(std::span<const float> embedding) {
    const auto& c = model_.config_;
    if (pos_ >= c.max_seq_len) {
      throw InvalidInput("sequence length exceeds max_seq_len " + std::to_string(c.max_seq_len));
    }
    const std::size_t d = c.hidden_dim;
    const std::size_t heads = c.num_heads;
    const std::size_t hd = d / heads;
    const std::size_t f = d * kMlpRatio;
    const float inv_sqrt_hd = 1.0f / std::sqrt(static_cast<float>(hd));

    std::vector<float> x(d), norm(d), q(d), attn(d), proj(d), up(f), scores(pos_ + 1);
    const float* pe = model_.pos_emb_.data() + pos_ * d;
    for (std::size_t i = 0; i < d; ++i) x[i] = embedding[i] + pe[i];

    for (std::uint32_t l = 0; l < c.num_layers; ++l) {
      const Block& blk = model_.blocks_[l];
      float* k_row = keys_[l].data() + pos_ * d;
      float* v_row = values_[l].data() + pos_ * d;

      model_.rms_norm(x, blk.attn_gain, norm);
      kernels::matvec(blk.wq, d, norm, q);
      kernels::matvec(blk.wk, d, norm, std::span(k_row, d));
      kernels::matvec(blk.wv, d, norm, std::span(v_row, d));

      std::fill(attn.begin(), attn.end(), 0.0f);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::span<const float> qh(q.data() + h * hd, hd);
        float hi = -INFINITY;
        for (std::size_t t = 0; t <= pos_; ++t) {
          const std::span<const float> kh(keys_[l].data() + t * d + h * hd, hd);
          scores[t] = kernels::dot(qh, kh) * inv_sqrt_hd;
          hi = std::max(hi, scores[t]);
        }
        float sum = 0.0f;
        for (std::size_t t = 0; t <= pos_; ++t) {
          scores[t] = std::exp(scores[t] - hi);
          sum += scores[t];
        }
        const std::span<float> out(attn.data() + h * hd, hd);
        for (std::size_t t = 0; t <= pos_; ++t) {
          kernels::axpy(scores[t] / sum, std::span<const float>(values_[l].data() + t * d + h * hd, hd), out);
        }
      }
      kernels::matvec(blk.wo, d, attn, proj);
      for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];

      model_.rms_norm(x, blk.mlp_gain, norm);
      kernels::matvec(blk.w1, f, norm, up);
      for (std::size_t i = 0; i < f; ++i) up[i] = gelu(up[i] + blk.b1[i]);
      kernels::matvec(blk.w2, d, up, proj);
      for (std::size_t i = 0; i < d; ++i) x[i] += proj[i] + blk.b2[i];

      std::copy(x.begin(), x.end(), last_hidden_.begin() + l * d);
    }
    ++pos_;
  }

  void push_text(TokenId token) {
    const auto& c = model_.config_;
    if (token >= c.vocab_size) {
      throw InvalidInput("token id " + std::to_string(token) + " out of range (vocab " +
                         std::to_string(c.vocab_size) + ")");
    }
    push(std::span(model_.tok_emb_).subspan(std::size_t{token} * c.hidden_dim, c.hidden_dim));
  }

  void push_visual(TokenId token) {
    const auto& c = model_.config_;
    if (token >= c.visual_vocab_size) {
      throw InvalidInput("visual token id " + std::to_string(token) + " out of range (visual vocab " +
                         std::to_string(c.visual_vocab_size) + ")");
    }
    push(std::span(model_.vis_emb_).subspan(std::size_t{token} * c.hidden_dim, c.hidden_dim));
  }

  void append(TokenId token) override { push_text(token); }

  LayerwiseStep readout(const ReadoutSpec& spec) const override {
    const auto& c = model_.config_;
    if (pos_ == 0) throw InvalidInput("readout on an empty sequence");
    LayerwiseStep step;
    step.num_layers = c.num_layers;
    step.vocab_size = c.vocab_size;
    step.first_layer = std::clamp<std::uint32_t>(spec.first_layer, 1, c.num_layers);
    step.early_logits.resize(std::size_t{step.rows()} * c.vocab_size);
    std::vector<float> norm(c.hidden_dim);
    for (std::uint32_t layer = step.first_layer; layer <= c.num_layers; ++layer) {
      const std::span<const float> h(last_hidden_.data() + std::size_t{layer - 1} * c.hidden_dim, c.hidden_dim);
      model_.rms_norm(h, model_.final_gain_, norm);
      const std::span<float> row(step.early_logits.data() + std::size_t{layer - step.first_layer} * c.vocab_size,
                                 c.vocab_size);
      kernels::matvec(model_.unembed_, c.vocab_size, norm, row);
    }
    if (spec.hidden) {
      step.hidden_dim = c.hidden_dim;
      step.hidden = last_hidden_;
    }
    return step;
  }

  std::unique_ptr<Session> clone() const override { return std::make_unique<ToySession>(*this); }

 private:
  const ToyModel& model_;
  std::vector<std::vector<float>> keys_, values_;
  std::vector<float> last_hidden_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------

ToyModel::ToyModel(const ToyModelConfig& config) : ToyModel(config, true) {}

ToyModel::ToyModel(const ToyModelConfig& config, bool initialize) : config_(config) {
  config_.validate();
  allocate();
  if (!initialize) return;

  const double d = config_.hidden_dim;
  const double f = d * kMlpRatio;
  const double proj_in = std::sqrt(3.0 / d);
  Rng rng(config_.seed, Rng::Stream::kWeights);
  fill_uniform(tok_emb_, rng, 1.0);
  fill_uniform(vis_emb_, rng, 1.0);
  fill_uniform(pos_emb_, rng, 0.5);
  for (Block& b : blocks_) {
    fill_uniform(b.wq, rng, proj_in);
    fill_uniform(b.wk, rng, proj_in);
    fill_uniform(b.wv, rng, proj_in);
    fill_uniform(b.wo, rng, 0.5 * proj_in);
    fill_uniform(b.w1, rng, proj_in);
    fill_uniform(b.w2, rng, 0.5 * std::sqrt(3.0 / f));
  }
  fill_uniform(unembed_, rng, 2.0 * proj_in);
}

void ToyModel::allocate() {
  const std::size_t d = config_.hidden_dim;
  const std::size_t f = d * kMlpRatio;
  tok_emb_.assign(std::size_t{config_.vocab_size} * d, 0.0f);
  vis_emb_.assign(std::size_t{config_.visual_vocab_size} * d, 0.0f);
  pos_emb_.assign(std::size_t{config_.max_seq_len} * d, 0.0f);
  blocks_.assign(config_.num_layers, Block{});
  for (Block& b : blocks_) {
    b.attn_gain.assign(d, 1.0f);
    b.wq.assign(d * d, 0.0f);
    b.wk.assign(d * d, 0.0f);
    b.wv.assign(d * d, 0.0f);
    b.wo.assign(d * d, 0.0f);
    b.mlp_gain.assign(d, 1.0f);
    b.w1.assign(f * d, 0.0f);
    b.b1.assign(f, 0.0f);
    b.w2.assign(d * f, 0.0f);
    b.b2.assign(d, 0.0f);
  }
  final_gain_.assign(d, 1.0f);
  unembed_.assign(std::size_t{config_.vocab_size} * d, 0.0f);
}

void ToyModel::visit(const std::function<void(const TensorView&)>& fn) {
  const std::uint32_t d = config_.hidden_dim;
  const std::uint32_t f = d * kMlpRatio;
  fn({"tok_emb", {config_.vocab_size, d}, &tok_emb_});
  fn({"vis_emb", {config_.visual_vocab_size, d}, &vis_emb_});
  fn({"pos_emb", {config_.max_seq_len, d}, &pos_emb_});
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    Block& b = blocks_[l];
    const std::string p = "blocks." + std::to_string(l) + ".";
    fn({p + "attn_gain", {d}, &b.attn_gain});
    fn({p + "wq", {d, d}, &b.wq});
    fn({p + "wk", {d, d}, &b.wk});
    fn({p + "wv", {d, d}, &b.wv});
    fn({p + "wo", {d, d}, &b.wo});
    fn({p + "mlp_gain", {d}, &b.mlp_gain});
    fn({p + "w1", {f, d}, &b.w1});
    fn({p + "b1", {f}, &b.b1});
    fn({p + "w2", {d, f}, &b.w2});
    fn({p + "b2", {d}, &b.b2});
  }
  fn({"final_gain", {d}, &final_gain_});
  fn({"unembed", {config_.vocab_size, d}, &unembed_});
}

void ToyModel::for_each_tensor(const std::function<void(const TensorView&)>& fn) const {
  const_cast<ToyModel*>(this)->visit(fn);
}

void ToyModel::rms_norm(std::span<const float> x, std::span<const float> gain, std::span<float> out) const {
  const float ss = kernels::dot(x, x);
  const float inv = 1.0f / std::sqrt(ss / static_cast<float>(x.size()) + kNormEps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
}

LogitsVector ToyModel::unembed(std::span<const float> hidden) const {
  if (hidden.size() != config_.hidden_dim) throw InvalidInput("unembed: hidden size mismatch");
  std::vector<float> norm(config_.hidden_dim);
  rms_norm(hidden, final_gain_, norm);
  LogitsVector out(config_.vocab_size);
  kernels::matvec(unembed_, config_.vocab_size, norm, out);
  return out;
}

std::unique_ptr<Session> ToyModel::start(const TokenSequence& prompt) const {
  if (prompt.ids.empty()) throw InvalidInput("forward: empty sequence");
  if (prompt.visual_prefix_len > prompt.ids.size()) {
    throw InvalidInput("forward: visual_prefix_len exceeds sequence length");
  }
  if (prompt.ids.size() > config_.max_seq_len) {
    throw InvalidInput("forward: sequence length " + std::to_string(prompt.ids.size()) +
                       " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
  }
  auto session = std::make_unique<ToySession>(*this);
  for (TokenId v : prompt.visual()) session->push_visual(v);
  for (TokenId t : prompt.text()) session->push_text(t);
  return session;
}

LayerwiseStep ToyModel::forward_no_visual(const TokenSequence& seq, bool want_hidden) const {
  if (seq.visual_prefix_len == 0) throw InvalidInput("forward_no_visual: sequence has no visual prefix");
  const auto text = seq.text();
  return forward(TokenSequence{{text.begin(), text.end()}, 0}, want_hidden);
}

// ---------------------------------------------------------------------------

void ToyModel::save_weights(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream blob(dir / "weights.bin", std::ios::binary);
  if (!blob) throw IoError("cannot write " + (dir / "weights.bin").string());

  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for_each_tensor([&](const TensorView& t) {
    detail::write_f32(blob, *t.data);
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"length", t.data->size()}});
    offset += t.data->size() * sizeof(float);
  });
  if (!blob) throw IoError("write failed: " + (dir / "weights.bin").string());

  nlohmann::ordered_json manifest;
  manifest["format"] = "deco-toy-weights";
  manifest["version"] = 1;
  manifest["config"] = {{"num_layers", config_.num_layers},   {"hidden_dim", config_.hidden_dim},
                        {"vocab_size", config_.vocab_size},   {"num_heads", config_.num_heads},
                        {"max_seq_len", config_.max_seq_len}, {"visual_vocab_size", config_.visual_vocab_size}};
  manifest["seed"] = config_.seed;
  manifest["rng"] = "mt19937_64";
  manifest["architecture"] = {{"norm", "rms"},          {"norm_eps", kNormEps},
                              {"mlp", "gelu_tanh"},     {"mlp_ratio", kMlpRatio},
                              {"attention", "causal"},  {"readout", "final_norm_then_unembed_every_layer"}};
  manifest["dtype"] = "float32";
  manifest["byte_order"] = "little";
  manifest["blob"] = "weights.bin";
  manifest["tensors"] = tensors;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

ToyModel ToyModel::load_weights(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight manifest: ") + e.what());
  }
  ToyModelConfig config;
  try {
    if (manifest.at("format") != "deco-toy-weights" || manifest.at("version") != 1) {
      throw FormatError("weight manifest: unsupported format or version");
    }
    const auto& c = manifest.at("config");
    config.num_layers = c.at("num_layers").get<std::uint32_t>();
    config.hidden_dim = c.at("hidden_dim").get<std::uint32_t>();
    config.vocab_size = c.at("vocab_size").get<std::uint32_t>();
    config.num_heads = c.at("num_heads").get<std::uint32_t>();
    config.max_seq_len = c.at("max_seq_len").get<std::uint32_t>();
    config.visual_vocab_size = c.at("visual_vocab_size").get<std::uint32_t>();
    config.seed = manifest.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight manifest: ") + e.what());
  }

  ToyModel model(config, false);
  const auto blob_path = dir / manifest.value("blob", std::string("weights.bin"));
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("cannot open " + blob_path.string());
  std::map<std::string, nlohmann::json> entries;
  for (const auto& t : manifest.at("tensors")) entries[t.at("name").get<std::string>()] = t;

  model.visit([&](const TensorView& t) {
    const auto it = entries.find(t.name);
    if (it == entries.end()) throw FormatError("weight manifest: missing tensor " + t.name);
    if (it->second.at("shape").get<std::vector<std::uint32_t>>() != t.shape) {
      throw FormatError("weight manifest: shape mismatch for " + t.name);
    }
    blob.seekg(static_cast<std::streamoff>(it->second.at("offset").get<std::uint64_t>()));
    detail::read_f32(blob, *t.data);
    if (!blob) throw FormatError("weight blob truncated at tensor " + t.name);
  });
  return model;
}

}  // namespace deco
