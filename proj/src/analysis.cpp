// SPDX-License-Identifier: Apache-2.0
#include "deco/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deco/error.hpp"

namespace deco {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kInDist: return "in_dist";
    case Split::kOod: return "ood";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "in_dist" || name == "in-dist") return Split::kInDist;
  if (name == "ood") return Split::kOod;
  throw InvalidInput("unknown split '" + name + "' (expected train, in_dist or ood)");
}

std::size_t ProbeDataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(examples.begin(), examples.end(), [s](const ProbeExample& e) { return e.split == s; }));
}

void ProbeDataset::validate() const {
  const std::size_t d = dim();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].features.size() != d) {
      throw InvalidInput("probe dataset: example " + std::to_string(i) + " has width " +
                         std::to_string(examples[i].features.size()) + ", expected " + std::to_string(d));
    }
    require_finite(std::span<const double>(examples[i].features), "probe features");
  }
}

double ProbeModel::logit(std::span<const double> features) const {
  if (features.size() != weights.size()) throw InvalidInput("probe: feature width mismatch");
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * features[i];
  return z;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LossGrad logistic_loss(const ProbeDataset& data, std::span<const double> weights, double bias, double l2) {
  const std::size_t d = weights.size();
  LossGrad out;
  out.grad_weights.assign(d, 0.0);
  std::size_t n = 0;
  for (const ProbeExample& e : data.examples) {
    if (e.split != Split::kTrain) continue;
    if (e.features.size() != d) throw InvalidInput("logistic_loss: feature width mismatch");
    double z = bias;
    for (std::size_t i = 0; i < d; ++i) z += weights[i] * e.features[i];
    const double y = e.exists ? 1.0 : 0.0;
    out.loss += softplus(z) - y * z;
    const double r = sigmoid(z) - y;
    for (std::size_t i = 0; i < d; ++i) out.grad_weights[i] += r * e.features[i];
    out.grad_bias += r;
    ++n;
  }
  if (n == 0) throw DegenerateData("logistic_loss: empty train split");
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  out.grad_bias *= inv;
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    out.grad_weights[i] = out.grad_weights[i] * inv + l2 * weights[i];
    sq += weights[i] * weights[i];
  }
  out.loss += 0.5 * l2 * sq;
  return out;
}

ProbeModel probe_train(const ProbeDataset& data, const ProbeParams& params, std::uint32_t layer) {
  data.validate();
  std::size_t pos = 0, neg = 0;
  for (const ProbeExample& e : data.examples) {
    if (e.split != Split::kTrain) continue;
    (e.exists ? pos : neg) += 1;
  }
  if (pos < 2 || neg < 2) {
    throw DegenerateData("probe_train: need at least two examples of each class (have " + std::to_string(pos) +
                         " positive, " + std::to_string(neg) + " negative)");
  }
  const double share = static_cast<double>(pos) / static_cast<double>(pos + neg);
  if (std::abs(share - 0.5) > 0.05 + 1e-12) {
    throw DegenerateData("probe_train: train labels unbalanced (" + std::to_string(pos) + " positive of " +
                         std::to_string(pos + neg) + ")");
  }
  if (!(params.learning_rate > 0.0) || !(params.l2 >= 0.0)) {
    throw InvalidInput("probe_train: learning rate must be > 0 and l2 >= 0");
  }

  ProbeModel model;
  model.weights.assign(data.dim(), 0.0);
  model.layer = layer;
  model.epochs = params.epochs;
  model.learning_rate = params.learning_rate;
  model.l2 = params.l2;
  for (std::uint32_t epoch = 0; epoch < params.epochs; ++epoch) {
    const LossGrad g = logistic_loss(data, model.weights, model.bias, params.l2);
    for (std::size_t i = 0; i < model.weights.size(); ++i) model.weights[i] -= params.learning_rate * g.grad_weights[i];
    model.bias -= params.learning_rate * g.grad_bias;
  }
  model.final_loss = logistic_loss(data, model.weights, model.bias, params.l2).loss;
  return model;
}

AccuracyBreakdown probe_accuracy(const ProbeModel& model, const ProbeDataset& data, Split split) {
  AccuracyBreakdown out;
  for (const ProbeExample& e : data.examples) {
    if (e.split != split) continue;
    const bool ok = model.predict(e.features) == e.exists;
    Accuracy& bucket = e.exists ? out.existent : out.non_existent;
    bucket.total += 1;
    bucket.correct += ok ? 1 : 0;
    out.all.total += 1;
    out.all.correct += ok ? 1 : 0;
  }
  if (out.all.total == 0) throw InvalidInput(std::string("probe_accuracy: split '") + split_name(split) + "' is empty");
  for (Accuracy* a : {&out.all, &out.existent, &out.non_existent}) {
    a->defined = a->total > 0;
    a->value = a->defined ? static_cast<double>(a->correct) / static_cast<double>(a->total) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

ActivationQuery make_activation_query(const LayerwiseStep& step, std::vector<TokenId> ground_truth,
                                      double threshold, double top_p) {
  ActivationQuery q;
  q.candidates = acquire_candidates(step, top_p);
  q.ground_truth = std::move(ground_truth);
  q.hallucinated = static_cast<TokenId>(argmax_tiebreak(step.final_logits()));
  q.threshold = threshold;
  return q;
}

std::optional<Activation> detect_activation(const LayerwiseStep& step, const ActivationQuery& query) {
  if (query.ground_truth.empty()) throw InvalidInput("detect_activation: empty ground-truth set");
  if (!(query.threshold > 0.0 && query.threshold < 1.0)) {
    throw InvalidInput("detect_activation: threshold must lie in (0, 1)");
  }
  if (step.first_layer != 1) throw InvalidInput("detect_activation: needs a full readout");
  if (query.hallucinated >= step.vocab_size) throw InvalidInput("detect_activation: x_h outside vocabulary");

  std::vector<TokenId> eligible;
  for (TokenId t : query.ground_truth) {
    if (query.candidates.contains(t)) eligible.push_back(t);
  }
  std::sort(eligible.begin(), eligible.end());
  eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());
  if (eligible.empty()) return std::nullopt;

  Activation act;
  bool found = false;
  double max_gap = -1.0;
  for (std::uint32_t layer = 1; layer <= step.num_layers; ++layer) {
    const ProbVector p = softmax(step.layer_logits(layer));
    bool layer_hit = false;
    for (TokenId t : eligible) {
      const double gap = p[t] - p[query.hallucinated];
      max_gap = std::max(max_gap, gap);
      if (gap >= query.threshold) {
        layer_hit = true;
        if (!found) {
          found = true;
          act.token = t;
          act.layer = layer;
        }
      }
    }
    if (layer_hit) act.activated_layers.push_back(layer);
  }
  if (!found) return std::nullopt;
  act.max_gap = max_gap;
  return act;
}

// ---------------------------------------------------------------------------

namespace {

void check_labeled(std::span<const LayerwiseStep> steps, std::span<const std::vector<TokenId>> ground_truth) {
  if (steps.empty()) throw InvalidInput("hit rate: empty trace set");
  if (steps.size() != ground_truth.size()) throw InvalidInput("hit rate: steps and labels differ in count");
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (ground_truth[i].empty()) throw InvalidInput("hit rate: step " + std::to_string(i) + " has no ground truth");
  }
}

bool is_hit(TokenId token, const std::vector<TokenId>& truth) {
  return std::find(truth.begin(), truth.end(), token) != truth.end();
}

}  // namespace

HitRateReport hit_rate(std::span<const LayerwiseStep> steps, std::span<const std::vector<TokenId>> ground_truth,
                       std::uint32_t layer_lo, std::uint32_t layer_hi, double top_p) {
  check_labeled(steps, ground_truth);
  HitRateReport r;
  r.layer_lo = layer_lo;
  r.layer_hi = layer_hi;
  r.total = steps.size();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const CandidateSet cands = acquire_candidates(steps[i], top_p);
    const AnchorSelection sel = select_anchor(steps[i], cands, layer_lo, layer_hi);
    const bool hit = is_hit(sel.winning_token, ground_truth[i]);
    r.picked.push_back(sel.winning_token);
    r.decisions.push_back(hit);
    r.hits += hit ? 1 : 0;
  }
  r.rate = static_cast<double>(r.hits) / static_cast<double>(r.total);
  return r;
}

OverlapReport overlap_rate(std::span<const LayerwiseStep> with_visual, std::span<const LayerwiseStep> without_visual,
                           double top_p) {
  if (with_visual.size() != without_visual.size()) throw InvalidInput("overlap_rate: unpaired inputs");
  if (with_visual.empty()) throw InvalidInput("overlap_rate: no pairs");
  OverlapReport r;
  r.total = with_visual.size();
  for (std::size_t i = 0; i < with_visual.size(); ++i) {
    if (with_visual[i].vocab_size != without_visual[i].vocab_size) {
      throw InvalidInput("overlap_rate: pair " + std::to_string(i) + " differs in vocabulary size");
    }
    const auto x_h = static_cast<TokenId>(argmax_tiebreak(with_visual[i].final_logits()));
    if (acquire_candidates(without_visual[i], top_p).contains(x_h)) ++r.overlapping;
  }
  r.rate = static_cast<double>(r.overlapping) / static_cast<double>(r.total);
  return r;
}

std::vector<AnchorSelection> perturb_layers(std::span<const AnchorSelection> selections, std::uint32_t magnitude,
                                            std::uint32_t num_layers, Rng& rng) {
  if (num_layers == 0) throw InvalidInput("perturb_layers: zero layers");
  std::vector<AnchorSelection> out(selections.begin(), selections.end());
  if (magnitude == 0) return out;
  const auto m = static_cast<std::int64_t>(magnitude);
  for (AnchorSelection& s : out) {
    if (!s.valid()) continue;
    const std::int64_t shifted = static_cast<std::int64_t>(s.anchor_layer) + rng.between(-m, m);
    s.anchor_layer = static_cast<std::uint32_t>(std::clamp<std::int64_t>(shifted, 1, num_layers));
  }
  return out;
}

std::vector<AnchorSelection> perturb_layers(std::span<const AnchorSelection> selections, std::uint32_t magnitude,
                                            std::uint32_t num_layers, std::uint64_t seed) {
  Rng rng(seed, Rng::Stream::kPerturb);
  return perturb_layers(selections, magnitude, num_layers, rng);
}

PerturbationReport perturbation_trials(std::span<const LayerwiseStep> steps,
                                       std::span<const std::vector<TokenId>> ground_truth, std::uint32_t layer_lo,
                                       std::uint32_t layer_hi, double top_p, std::uint32_t magnitude,
                                       std::uint32_t trials, std::uint64_t seed) {
  check_labeled(steps, ground_truth);
  const std::uint32_t n_layers = steps.front().num_layers;
  std::vector<CandidateSet> cands;
  std::vector<AnchorSelection> base;
  std::size_t base_hits = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].num_layers != n_layers || steps[i].first_layer != 1) {
      throw InvalidInput("perturbation: steps need full readouts of equal depth");
    }
    cands.push_back(acquire_candidates(steps[i], top_p));
    base.push_back(select_anchor(steps[i], cands.back(), layer_lo, layer_hi));
    base_hits += is_hit(base.back().winning_token, ground_truth[i]) ? 1 : 0;
  }
  const double total = static_cast<double>(steps.size());

  PerturbationReport r;
  r.base_rate = static_cast<double>(base_hits) / total;
  Rng rng(seed, Rng::Stream::kPerturb);
  for (std::uint32_t t = 0; t < trials; ++t) {
    const auto shifted = perturb_layers(base, magnitude, n_layers, rng);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const std::uint32_t layer = shifted[i].anchor_layer;
      const AnchorSelection at = select_anchor(steps[i], cands[i], layer, layer);
      hits += is_hit(at.winning_token, ground_truth[i]) ? 1 : 0;
    }
    const double rate = static_cast<double>(hits) / total;
    r.trial_rates.push_back(rate);
    r.trials_not_higher += rate <= r.base_rate ? 1 : 0;
    r.trials_strictly_lower += rate < r.base_rate ? 1 : 0;
  }
  return r;
}

}  // namespace deco
