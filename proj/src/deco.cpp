// SPDX-License-Identifier: Apache-2.0
#include "deco/deco.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deco/error.hpp"
#include "deco/kernels.hpp"

namespace deco {

std::pair<std::uint32_t, std::uint32_t> default_interval(std::uint32_t num_layers) {
  if (num_layers == 0) throw InvalidInput("default_interval: zero layers");
  const std::uint32_t n = num_layers;
  std::uint32_t lo = (20 * n + 31) / 32;
  std::uint32_t hi = (28 * n) / 32;
  hi = std::clamp<std::uint32_t>(hi, 1, n);
  lo = std::clamp<std::uint32_t>(lo, 1, hi);
  return {lo, hi};
}

DecoConfig resolve(const DecoConfig& cfg, std::uint32_t num_layers) {
  DecoConfig out = cfg;
  if (out.layer_lo == 0 && out.layer_hi == 0) {
    std::tie(out.layer_lo, out.layer_hi) = default_interval(num_layers);
  }
  if (out.layer_lo < 1 || out.layer_lo > out.layer_hi || out.layer_hi > num_layers) {
    throw InvalidInput("deco: layer interval [" + std::to_string(out.layer_lo) + ", " +
                       std::to_string(out.layer_hi) + "] outside [1, " + std::to_string(num_layers) + "]");
  }
  if (!(out.alpha >= 0.0) || !std::isfinite(out.alpha)) throw InvalidInput("deco: alpha must be >= 0");
  if (!(out.top_p > 0.0 && out.top_p <= 1.0)) throw InvalidInput("deco: top_p must lie in (0, 1]");
  return out;
}

bool CandidateSet::contains(TokenId t) const {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

CandidateSet acquire_candidates(const LayerwiseStep& step, double top_p) {
  const ProbVector probs = softmax(step.final_logits());
  CandidateSet out;
  out.tokens = top_p_truncate(probs, top_p);
  out.probs.reserve(out.tokens.size());
  for (TokenId t : out.tokens) out.probs.push_back(probs[t]);
  return out;
}

AnchorSelection select_anchor(const LayerwiseStep& step, const CandidateSet& candidates,
                              std::uint32_t layer_lo, std::uint32_t layer_hi) {
  if (candidates.tokens.empty()) throw InvalidInput("select_anchor: empty candidate set");
  if (layer_lo < 1 || layer_lo > layer_hi || layer_hi > step.num_layers) {
    throw InvalidInput("select_anchor: interval [" + std::to_string(layer_lo) + ", " +
                       std::to_string(layer_hi) + "] outside [1, " + std::to_string(step.num_layers) + "]");
  }
  for (TokenId t : candidates.tokens) {
    if (t >= step.vocab_size) throw InvalidInput("select_anchor: candidate outside vocabulary");
  }

  AnchorSelection best;
  for (std::uint32_t layer = layer_lo; layer <= layer_hi; ++layer) {
    const auto logits = step.layer_logits(layer);
    require_finite(logits, "select_anchor");
    // p_t = exp(l_t - max) / Z; only the candidates need materializing.
    const double hi = kernels::active().max(logits.data(), logits.size());
    double z = 0.0;
    for (float v : logits) z += std::exp(static_cast<double>(v) - hi);
    for (TokenId t : candidates.tokens) {
      const double p = std::exp(static_cast<double>(logits[t]) - hi) / z;
      const bool better = !best.valid() || p > best.winning_prob ||
                          (p == best.winning_prob && layer == best.anchor_layer && t < best.winning_token);
      if (better) {
        best.anchor_layer = layer;
        best.winning_token = t;
        best.winning_prob = p;
        best.max_prob = 1.0 / z;
      }
    }
  }
  return best;
}

AnchorSelection select_anchor(const LayerwiseStep& step, const CandidateSet& candidates, const DecoConfig& cfg) {
  return select_anchor(step, candidates, cfg.layer_lo, cfg.layer_hi);
}

LogitsVector correct_logits(const LayerwiseStep& step, const AnchorSelection& sel, const DecoConfig& cfg) {
  const auto final_logits = step.final_logits();
  if (!cfg.enabled || cfg.alpha == 0.0) return {final_logits.begin(), final_logits.end()};
  if (!sel.valid()) throw InvalidInput("correct_logits: no anchor selected");
  const auto anchor = step.layer_logits(sel.anchor_layer);
  const double m = cfg.modulation == Modulation::kMaxProb ? sel.max_prob : 1.0;
  const float coef = static_cast<float>(cfg.alpha * m);
  LogitsVector out(final_logits.size());
  kernels::active().scaled_add(final_logits.data(), coef, anchor.data(), out.data(), out.size());
  return out;
}

DecoOutput deco_process(const LayerwiseStep& step, const DecoConfig& cfg) {
  if (!cfg.enabled) {
    const auto f = step.final_logits();
    return {LogitsVector(f.begin(), f.end()), AnchorSelection{}};
  }
  const CandidateSet candidates = acquire_candidates(step, cfg.top_p);
  const AnchorSelection sel = select_anchor(step, candidates, cfg);
  return {correct_logits(step, sel, cfg), sel};
}

}  // namespace deco
