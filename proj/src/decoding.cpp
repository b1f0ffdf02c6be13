// SPDX-License-Identifier: Apache-2.0
#include "deco/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "deco/error.hpp"
#include "deco/rng.hpp"

namespace deco {

void DecodeConfig::validate() const {
  if (max_new_tokens < 1) throw InvalidInput("decode: max_new_tokens must be >= 1");
  if (beam_width < 1) throw InvalidInput("decode: beam_width must be >= 1");
  if (!(sampling_top_p > 0.0 && sampling_top_p <= 1.0)) {
    throw InvalidInput("decode: sampling_top_p must lie in (0, 1]");
  }
  if (!(repetition_penalty >= 1.0) || !std::isfinite(repetition_penalty)) {
    throw InvalidInput("decode: repetition_penalty must be >= 1");
  }
}

LogitsVector apply_repetition_penalty(std::span<const float> logits, std::span<const TokenId> history,
                                      double penalty) {
  if (!(penalty >= 1.0)) throw InvalidInput("repetition penalty must be >= 1");
  LogitsVector out(logits.begin(), logits.end());
  if (penalty == 1.0) return out;
  std::vector<bool> seen(out.size(), false);
  const auto p = static_cast<float>(penalty);
  for (TokenId t : history) {
    if (t >= out.size()) throw InvalidInput("repetition penalty: history token outside vocabulary");
    if (seen[t]) continue;
    seen[t] = true;
    out[t] = out[t] > 0.0f ? out[t] / p : out[t] * p;
  }
  return out;
}

namespace {

struct Processed {
  LogitsVector logits;
  AnchorSelection selection;
};

Processed process_step(const LayerwiseStep& step, const DecoConfig& deco, double penalty,
                       std::span<const TokenId> history) {
  DecoOutput out = deco_process(step, deco);
  if (penalty > 1.0) out.logits = apply_repetition_penalty(out.logits, history, penalty);
  return {std::move(out.logits), out.selection};
}

TokenId sample_nucleus(const ProbVector& probs, double top_p, Rng& rng) {
  const std::vector<TokenId> keep = top_p_truncate(probs, top_p);
  double mass = 0.0;
  for (TokenId t : keep) mass += probs[t];
  const double u = rng.uniform() * mass;
  double cum = 0.0;
  for (TokenId t : keep) {
    cum += probs[t];
    if (u < cum) return t;
  }
  return keep.back();
}

std::vector<TokenId> initial_history(const TokenSequence& prompt) {
  const auto text = prompt.text();
  return {text.begin(), text.end()};
}

void decode_linear(const LayerwiseModel& model, const TokenSequence& prompt, const DecodeConfig& dcfg,
                   const DecoConfig& deco, const ReadoutSpec& spec, const DecodeOptions& options,
                   DecodeResult& result) {
  auto session = model.start(prompt);
  Rng rng(dcfg.seed, Rng::Stream::kSampling);
  std::vector<TokenId> history = initial_history(prompt);

  for (std::uint32_t i = 0; i < dcfg.max_new_tokens; ++i) {
    const LayerwiseStep step = session->readout(spec);
    if (options.observer) options.observer(step);
    const Processed p = process_step(step, deco, dcfg.repetition_penalty, history);
    const ProbVector probs = softmax(p.logits);
    const TokenId token = dcfg.strategy == Strategy::kGreedy
                              ? static_cast<TokenId>(argmax_tiebreak(std::span<const float>(p.logits)))
                              : sample_nucleus(probs, dcfg.sampling_top_p, rng);
    result.tokens.push_back(token);
    result.chosen_probs.push_back(probs[token]);
    if (deco.enabled) result.anchors.push_back(p.selection);
    history.push_back(token);
    if (dcfg.stop_token && token == *dcfg.stop_token) break;
    if (i + 1 < dcfg.max_new_tokens) session->append(token);
  }
}

struct Beam {
  std::unique_ptr<Session> session;
  std::vector<TokenId> tokens;
  std::vector<AnchorSelection> anchors;
  std::vector<double> probs;
  double score = 0.0;
  bool done = false;
};

struct BeamCandidate {
  double score;
  std::size_t beam;
  TokenId token;  // AnchorSelection::kNoToken carries a finished beam forward
  double prob;
  AnchorSelection selection;
};

void decode_beam(const LayerwiseModel& model, const TokenSequence& prompt, const DecodeConfig& dcfg,
                 const DecoConfig& deco, const ReadoutSpec& spec, DecodeResult& result) {
  const std::size_t width = dcfg.beam_width;
  const std::vector<TokenId> base_history = initial_history(prompt);

  std::vector<Beam> beams;
  beams.push_back(Beam{model.start(prompt), {}, {}, {}, 0.0, false});

  for (std::uint32_t i = 0; i < dcfg.max_new_tokens; ++i) {
    std::vector<BeamCandidate> cands;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      const Beam& beam = beams[b];
      if (beam.done) {
        cands.push_back({beam.score, b, AnchorSelection::kNoToken, 0.0, {}});
        continue;
      }
      std::vector<TokenId> history = base_history;
      history.insert(history.end(), beam.tokens.begin(), beam.tokens.end());
      const Processed p = process_step(beam.session->readout(spec), deco, dcfg.repetition_penalty, history);
      const std::vector<double> logp = log_softmax(p.logits);
      const ProbVector probs = softmax(p.logits);

      std::vector<TokenId> order(logp.size());
      for (TokenId t = 0; t < order.size(); ++t) order[t] = t;
      const std::size_t keep = std::min(width, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                        [&](TokenId x, TokenId y) { return logp[x] > logp[y] || (logp[x] == logp[y] && x < y); });
      for (std::size_t k = 0; k < keep; ++k) {
        const TokenId t = order[k];
        cands.push_back({beam.score + logp[t], b, t, probs[t], p.selection});
      }
    }

    std::stable_sort(cands.begin(), cands.end(), [](const BeamCandidate& x, const BeamCandidate& y) {
      if (x.score != y.score) return x.score > y.score;
      if (x.beam != y.beam) return x.beam < y.beam;
      return x.token < y.token;
    });
    cands.resize(std::min(width, cands.size()));

    const bool last_step = i + 1 == dcfg.max_new_tokens;
    std::vector<Beam> next;
    next.reserve(cands.size());
    for (const BeamCandidate& c : cands) {
      const Beam& parent = beams[c.beam];
      Beam child{parent.session->clone(), parent.tokens, parent.anchors, parent.probs, c.score, parent.done};
      if (c.token != AnchorSelection::kNoToken) {
        child.tokens.push_back(c.token);
        child.probs.push_back(c.prob);
        if (deco.enabled) child.anchors.push_back(c.selection);
        child.done = dcfg.stop_token && c.token == *dcfg.stop_token;
        if (!child.done && !last_step) child.session->append(c.token);
      }
      next.push_back(std::move(child));
    }
    beams = std::move(next);
    if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;
  }

  Beam& best = beams.front();
  result.tokens = std::move(best.tokens);
  result.anchors = std::move(best.anchors);
  result.chosen_probs = std::move(best.probs);
}

}  // namespace

DecodeResult decode(const LayerwiseModel& model, const TokenSequence& prompt, const DecodeConfig& dcfg,
                    const DecoConfig& deco_in, const DecodeOptions& options) {
  dcfg.validate();
  const DecoConfig deco = deco_in.enabled ? resolve(deco_in, model.num_layers()) : deco_in;
  if (dcfg.stop_token && *dcfg.stop_token >= model.vocab_size()) {
    throw InvalidInput("decode: stop token outside vocabulary");
  }
  ReadoutSpec spec;
  spec.first_layer = options.full_readout ? 1 : (deco.enabled ? deco.layer_lo : model.num_layers());
  spec.hidden = options.want_hidden;

  const auto t0 = std::chrono::steady_clock::now();
  DecodeResult result;
  if (dcfg.strategy == Strategy::kBeam) {
    if (options.observer) throw InvalidInput("decode: step observers need a linear strategy");
    decode_beam(model, prompt, dcfg, deco, spec, result);
  } else {
    decode_linear(model, prompt, dcfg, deco, spec, options, result);
  }
  result.duration = std::chrono::steady_clock::now() - t0;
  return result;
}

}  // namespace deco
