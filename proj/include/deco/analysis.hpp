// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deco/deco.hpp"
#include "deco/layerwise.hpp"
#include "deco/rng.hpp"

namespace deco {

// ---- linear probes --------------------------------------------------------

enum class Split { kTrain, kInDist, kOod };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct ProbeExample {
  std::vector<double> features;
  bool exists = false;
  Split split = Split::kTrain;
};

struct ProbeDataset {
  std::vector<ProbeExample> examples;

  std::size_t dim() const { return examples.empty() ? 0 : examples.front().features.size(); }
  std::size_t count(Split s) const;
  /// Uniform feature width; throws InvalidInput.
  void validate() const;
};

struct ProbeParams {
  double learning_rate = 0.5;
  std::uint32_t epochs = 300;
  double l2 = 1e-4;
};

struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::uint32_t layer = 0;
  std::uint32_t epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  double final_loss = 0.0;

  double logit(std::span<const double> features) const;
  bool predict(std::span<const double> features) const { return logit(features) >= 0.0; }

  friend bool operator==(const ProbeModel&, const ProbeModel&) = default;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

/// Mean binary cross-entropy of sigmoid(w.x + b) plus (l2 / 2) |w|^2, and its
/// analytic gradient, over the train split.
LossGrad logistic_loss(const ProbeDataset& data, std::span<const double> weights, double bias, double l2);

/// Full-batch gradient descent from zero. Requires at least two examples of
/// each class in the train split and a label balance within 45%..55%.
/// Throws DegenerateData.
ProbeModel probe_train(const ProbeDataset& data, const ProbeParams& params, std::uint32_t layer = 0);

struct Accuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value = 0.0;  // 0 with defined == false when total == 0
  bool defined = false;
};

struct AccuracyBreakdown {
  Accuracy all, existent, non_existent;
};

/// Threshold-0.5 accuracy on one split. Throws InvalidInput on an empty split.
AccuracyBreakdown probe_accuracy(const ProbeModel& model, const ProbeDataset& data, Split split);

// ---- early-exit activation -----------------------------------------------

struct ActivationQuery {
  CandidateSet candidates;
  std::vector<TokenId> ground_truth;
  TokenId hallucinated = AnchorSelection::kNoToken;  // final-layer argmax
  double threshold = 0.1;
};

/// Candidates from the final layer at `top_p`, x_h = final-layer argmax.
ActivationQuery make_activation_query(const LayerwiseStep& step, std::vector<TokenId> ground_truth,
                                      double threshold = 0.1, double top_p = 0.9);

struct Activation {
  TokenId token = AnchorSelection::kNoToken;  // earliest activated ground-truth token
  std::uint32_t layer = 0;                    // earliest qualifying layer
  double max_gap = 0.0;                       // over every layer and eligible token
  std::vector<std::uint32_t> activated_layers;  // every layer with some qualifying token
};

/// Scans layers 1..N for a ground-truth candidate x_a with
/// p_i(x_a) - p_i(x_h) >= threshold. Ground-truth tokens outside the candidate
/// set are ignored. Requires a full readout.
std::optional<Activation> detect_activation(const LayerwiseStep& step, const ActivationQuery& query);

// ---- anchor hit rate ------------------------------------------------------

struct HitRateReport {
  std::uint32_t layer_lo = 0, layer_hi = 0;
  std::size_t hits = 0, total = 0;
  double rate = 0.0;
  std::vector<TokenId> picked;  // x_th per step
  std::vector<bool> decisions;
};

/// x_th = highest-probability final-layer candidate over layers [lo, hi];
/// a hit when x_th is a ground-truth token.
HitRateReport hit_rate(std::span<const LayerwiseStep> steps, std::span<const std::vector<TokenId>> ground_truth,
                       std::uint32_t layer_lo, std::uint32_t layer_hi, double top_p = 0.9);

// ---- visual / no-visual overlap --------------------------------------------

struct OverlapReport {
  std::size_t overlapping = 0, total = 0;
  double rate = 0.0;
};

/// Fraction of pairs whose with-visual final argmax lies in the no-visual
/// final-layer candidate set.
OverlapReport overlap_rate(std::span<const LayerwiseStep> with_visual, std::span<const LayerwiseStep> without_visual,
                           double top_p = 0.9);

// ---- layer perturbation ---------------------------------------------------

/// Shifts each anchor layer by a uniform integer in [-magnitude, magnitude],
/// clamped to [1, num_layers]. Invalid (sentinel) selections pass through.
std::vector<AnchorSelection> perturb_layers(std::span<const AnchorSelection> selections, std::uint32_t magnitude,
                                            std::uint32_t num_layers, Rng& rng);
std::vector<AnchorSelection> perturb_layers(std::span<const AnchorSelection> selections, std::uint32_t magnitude,
                                            std::uint32_t num_layers, std::uint64_t seed);

struct PerturbationReport {
  double base_rate = 0.0;
  std::vector<double> trial_rates;
  std::size_t trials_not_higher = 0;
  std::size_t trials_strictly_lower = 0;
};

/// Repeats the hit-rate computation with the anchor layer of every step
/// randomly shifted; x_th is then the top candidate at the shifted layer.
PerturbationReport perturbation_trials(std::span<const LayerwiseStep> steps,
                                       std::span<const std::vector<TokenId>> ground_truth, std::uint32_t layer_lo,
                                       std::uint32_t layer_hi, double top_p, std::uint32_t magnitude,
                                       std::uint32_t trials, std::uint64_t seed);

}  // namespace deco
