// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "deco/numerics.hpp"

namespace deco {

/// Prompt tokens. The first `visual_prefix_len` ids index the pseudo-visual
/// embedding table; the rest are text tokens in [0, vocab).
struct TokenSequence {
  std::vector<TokenId> ids;
  std::uint32_t visual_prefix_len = 0;

  std::span<const TokenId> visual() const { return std::span(ids).first(visual_prefix_len); }
  std::span<const TokenId> text() const { return std::span(ids).subspan(visual_prefix_len); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Per-layer readout at the last position of one decoding step.
///
/// Early-exit logits are stored for layers [first_layer, num_layers] (1-based,
/// row-major). A full readout has first_layer == 1; decoders that only need
/// the tail of the stack ask for less. Hidden states, when present, cover all
/// layers.
struct LayerwiseStep {
  std::uint32_t num_layers = 0;
  std::uint32_t vocab_size = 0;
  std::uint32_t first_layer = 1;
  std::vector<float> early_logits;

  std::uint32_t hidden_dim = 0;
  std::vector<float> hidden;

  std::uint32_t rows() const { return num_layers - first_layer + 1; }
  bool has_layer(std::uint32_t layer) const { return layer >= first_layer && layer <= num_layers; }
  bool has_hidden() const { return hidden_dim > 0; }

  /// Throws InvalidInput if `layer` was not read out.
  std::span<const float> layer_logits(std::uint32_t layer) const;
  std::span<const float> final_logits() const { return layer_logits(num_layers); }
  std::span<const float> layer_hidden(std::uint32_t layer) const;

  /// Checks shapes and finiteness; throws InvalidInput.
  void validate() const;

  friend bool operator==(const LayerwiseStep&, const LayerwiseStep&) = default;
};

/// What a session should compute when reading out a step.
struct ReadoutSpec {
  std::uint32_t first_layer = 1;  // clamped to [1, N]
  bool hidden = false;
};

/// Incremental decoding state over one sequence.
class Session {
 public:
  virtual ~Session() = default;
  /// Appends one generated text token.
  virtual void append(TokenId token) = 0;
  /// Readout for the next-token prediction at the current position.
  virtual LayerwiseStep readout(const ReadoutSpec& spec) const = 0;
  virtual std::unique_ptr<Session> clone() const = 0;
};

/// Anything that yields per-layer early-exit logits for a token sequence.
class LayerwiseModel {
 public:
  virtual ~LayerwiseModel() = default;
  virtual std::uint32_t num_layers() const = 0;
  virtual std::uint32_t vocab_size() const = 0;
  virtual std::uint32_t hidden_dim() const = 0;
  /// Starts a session with `prompt` already consumed.
  virtual std::unique_ptr<Session> start(const TokenSequence& prompt) const = 0;

  /// One-shot readout of the last position of `seq`.
  LayerwiseStep forward(const TokenSequence& seq, bool want_hidden = false) const;
};

}  // namespace deco
