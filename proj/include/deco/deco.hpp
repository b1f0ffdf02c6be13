// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "deco/layerwise.hpp"
#include "deco/numerics.hpp"

namespace deco {

enum class Modulation { kMaxProb, kNone };

struct DecoConfig {
  double alpha = 0.6;
  /// 1-based inclusive layer interval. Zero means "scale the 20..28-of-32
  /// default to the model depth" (see default_interval).
  std::uint32_t layer_lo = 0;
  std::uint32_t layer_hi = 0;
  double top_p = 0.9;
  Modulation modulation = Modulation::kMaxProb;
  bool enabled = true;

  friend bool operator==(const DecoConfig&, const DecoConfig&) = default;
};

/// [ceil(20N/32), floor(28N/32)] clamped to [1, N] with lo <= hi.
std::pair<std::uint32_t, std::uint32_t> default_interval(std::uint32_t num_layers);

/// Fills a zero interval from default_interval and checks the ranges.
/// Throws InvalidInput.
DecoConfig resolve(const DecoConfig& cfg, std::uint32_t num_layers);

/// Final-layer top-p truncation, in descending probability.
struct CandidateSet {
  std::vector<TokenId> tokens;
  std::vector<double> probs;

  bool contains(TokenId t) const;
};

struct AnchorSelection {
  static constexpr TokenId kNoToken = std::numeric_limits<TokenId>::max();

  std::uint32_t anchor_layer = 0;  // 0 when DeCo did not run
  TokenId winning_token = kNoToken;
  double winning_prob = 0.0;
  double max_prob = 0.0;

  bool valid() const { return anchor_layer != 0; }
  friend bool operator==(const AnchorSelection&, const AnchorSelection&) = default;
};

CandidateSet acquire_candidates(const LayerwiseStep& step, double top_p);

/// Highest candidate probability over layers [lo, hi]; ties go to the lower
/// layer, then the lower token id. max_prob is the largest probability of the
/// anchor layer over the whole vocabulary.
AnchorSelection select_anchor(const LayerwiseStep& step, const CandidateSet& candidates,
                              std::uint32_t layer_lo, std::uint32_t layer_hi);
AnchorSelection select_anchor(const LayerwiseStep& step, const CandidateSet& candidates, const DecoConfig& cfg);

/// final + alpha * m * anchor, with m = max_prob or 1. Returns the final
/// logits unchanged when disabled or alpha == 0.
LogitsVector correct_logits(const LayerwiseStep& step, const AnchorSelection& sel, const DecoConfig& cfg);

struct DecoOutput {
  LogitsVector logits;
  AnchorSelection selection;
};

/// acquire_candidates -> select_anchor -> correct_logits. `cfg` must already
/// be resolved against the model depth.
DecoOutput deco_process(const LayerwiseStep& step, const DecoConfig& cfg);

}  // namespace deco
