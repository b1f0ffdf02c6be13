// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "deco/layerwise.hpp"

namespace deco {

struct ToyModelConfig {
  std::uint32_t num_layers = 8;
  std::uint32_t hidden_dim = 64;
  std::uint32_t vocab_size = 256;
  std::uint32_t num_heads = 4;
  std::uint32_t max_seq_len = 256;
  std::uint32_t visual_vocab_size = 16;
  std::uint64_t seed = 7;

  /// N >= 2, heads divide D, V >= 8. Throws InvalidInput.
  void validate() const;

  friend bool operator==(const ToyModelConfig&, const ToyModelConfig&) = default;
};

/// A named float32 tensor as it appears in a weight dump.
struct TensorView {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float>* data;
};

/// Deterministic decoder-only transformer.
///
/// Pre-norm blocks (RMSNorm -> causal multi-head attention -> residual,
/// RMSNorm -> GELU MLP with 4x width -> residual) over token plus learned
/// position embeddings. Pseudo-visual prefix tokens come from their own
/// embedding table. Every layer is read out through the final RMSNorm and the
/// untied unembedding, so early-exit logits follow the logit-lens convention.
///
/// Weights are drawn from Rng(seed) in tensor declaration order as
/// (2u - 1) * scale with u uniform in [0, 1); norm gains are 1, biases 0.
class ToyModel final : public LayerwiseModel {
 public:
  explicit ToyModel(const ToyModelConfig& config);

  /// Loads a dump written by save_weights(). The seed is carried in the
  /// manifest but the tensors are taken verbatim from the blob.
  static ToyModel load_weights(const std::filesystem::path& dir);

  /// Writes manifest.json and weights.bin (float32 little-endian) into `dir`.
  void save_weights(const std::filesystem::path& dir) const;

  const ToyModelConfig& config() const { return config_; }

  std::uint32_t num_layers() const override { return config_.num_layers; }
  std::uint32_t vocab_size() const override { return config_.vocab_size; }
  std::uint32_t hidden_dim() const override { return config_.hidden_dim; }
  std::unique_ptr<Session> start(const TokenSequence& prompt) const override;

  /// Final RMSNorm followed by the unembedding.
  LogitsVector unembed(std::span<const float> hidden) const;

  /// Same prompt with the visual prefix removed. Throws if there is none.
  LayerwiseStep forward_no_visual(const TokenSequence& seq, bool want_hidden = false) const;

  /// Visits every tensor in declaration order.
  void for_each_tensor(const std::function<void(const TensorView&)>& fn) const;

 private:
  struct Block {
    std::vector<float> attn_gain, wq, wk, wv, wo;
    std::vector<float> mlp_gain, w1, b1, w2, b2;
  };

  class ToySession;

  ToyModel(const ToyModelConfig& config, bool initialize);
  void allocate();
  void visit(const std::function<void(const TensorView&)>& fn);
  void rms_norm(std::span<const float> x, std::span<const float> gain, std::span<float> out) const;

  ToyModelConfig config_;
  std::vector<float> tok_emb_, vis_emb_, pos_emb_;
  std::vector<Block> blocks_;
  std::vector<float> final_gain_, unembed_;
};

}  // namespace deco
