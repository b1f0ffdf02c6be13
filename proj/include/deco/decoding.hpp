// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "deco/deco.hpp"
#include "deco/layerwise.hpp"

namespace deco {

enum class Strategy { kGreedy, kNucleus, kBeam };

struct DecodeConfig {
  Strategy strategy = Strategy::kGreedy;
  std::uint32_t max_new_tokens = 32;
  double sampling_top_p = 0.9;
  std::uint32_t beam_width = 1;
  double repetition_penalty = 1.0;
  std::uint64_t seed = 0;
  std::optional<TokenId> stop_token;

  /// Throws InvalidInput.
  void validate() const;

  friend bool operator==(const DecodeConfig&, const DecodeConfig&) = default;
};

struct DecodeResult {
  std::vector<TokenId> tokens;
  std::vector<AnchorSelection> anchors;  // one per generated token when DeCo ran
  std::vector<double> chosen_probs;      // softmax of the processed logits
  std::chrono::nanoseconds duration{0};
};

/// Called with the raw readout of every step of a linear (non-beam) decode.
using StepObserver = std::function<void(const LayerwiseStep&)>;

struct DecodeOptions {
  StepObserver observer;
  /// Read out every layer instead of only those DeCo needs.
  bool full_readout = false;
  bool want_hidden = false;
};

/// CTRL-style penalty: for every distinct token in `history`, a positive
/// logit is divided by `penalty`, a non-positive one multiplied by it.
LogitsVector apply_repetition_penalty(std::span<const float> logits, std::span<const TokenId> history,
                                      double penalty);

/// Autoregressive decode. Each step: readout, DeCo (if enabled), repetition
/// penalty (if > 1), then the strategy picks the next token. `deco` is
/// resolved against the model depth internally.
DecodeResult decode(const LayerwiseModel& model, const TokenSequence& prompt, const DecodeConfig& dcfg,
                    const DecoConfig& deco, const DecodeOptions& options = {});

}  // namespace deco
