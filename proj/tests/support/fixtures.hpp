// SPDX-License-Identifier: Apache-2.0
// Synthetic layerwise steps and brute-force oracles shared by the unit and
// acceptance tests. Nothing here calls into the library's numerics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "deco/layerwise.hpp"

namespace fx {

using deco::LayerwiseStep;
using deco::TokenId;

inline LayerwiseStep step_from_rows(const std::vector<std::vector<float>>& rows) {
  LayerwiseStep s;
  s.num_layers = static_cast<std::uint32_t>(rows.size());
  s.vocab_size = static_cast<std::uint32_t>(rows.front().size());
  s.first_layer = 1;
  for (const auto& r : rows) s.early_logits.insert(s.early_logits.end(), r.begin(), r.end());
  return s;
}

inline std::vector<float> row(const LayerwiseStep& s, std::uint32_t layer) {
  auto first = s.early_logits.begin() + static_cast<std::ptrdiff_t>(layer - s.first_layer) * s.vocab_size;
  return std::vector<float>(first, first + s.vocab_size);
}

inline float uniform(std::mt19937_64& g, double lo, double hi) {
  return static_cast<float>(std::uniform_real_distribution<double>(lo, hi)(g));
}

inline LayerwiseStep random_step(std::mt19937_64& g, std::uint32_t layers, std::uint32_t vocab, double scale,
                                 std::uint32_t hidden_dim = 0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<std::vector<float>> rows(layers, std::vector<float>(vocab));
  for (auto& r : rows)
    for (auto& x : r) x = static_cast<float>(n(g));
  LayerwiseStep s = step_from_rows(rows);
  if (hidden_dim > 0) {
    s.hidden_dim = hidden_dim;
    s.hidden.resize(static_cast<std::size_t>(layers) * hidden_dim);
    for (auto& x : s.hidden) x = static_cast<float>(n(g));
  }
  return s;
}

// ---- reference probability math (long double) -----------------------------

inline std::vector<long double> ref_softmax(const std::vector<float>& logits) {
  long double m = *std::max_element(logits.begin(), logits.end());
  std::vector<long double> p(logits.size());
  long double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(static_cast<long double>(logits[i]) - m);
  for (auto& x : p) x /= z;
  return p;
}

/// Smallest descending-probability prefix (ties by id) reaching mass p.
inline std::vector<TokenId> ref_candidates(const std::vector<float>& final_logits, double p) {
  auto prob = ref_softmax(final_logits);
  std::vector<TokenId> ids(prob.size());
  std::iota(ids.begin(), ids.end(), 0u);
  std::sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) { return prob[a] != prob[b] ? prob[a] > prob[b] : a < b; });
  std::vector<TokenId> out;
  long double mass = 0;
  for (TokenId t : ids) {
    out.push_back(t);
    mass += prob[t];
    if (mass >= p) break;
  }
  return out;
}

struct RefAnchor {
  std::uint32_t layer = 0;
  TokenId token = 0;
  long double prob = -1;
};

/// Exhaustive (layer x candidate) scan; strict improvement only, so ties stay
/// with the lower layer and then the lower id.
inline RefAnchor ref_anchor(const LayerwiseStep& s, std::uint32_t lo, std::uint32_t hi, double top_p) {
  auto cands = ref_candidates(row(s, s.num_layers), top_p);
  std::sort(cands.begin(), cands.end());
  RefAnchor best;
  for (std::uint32_t l = lo; l <= hi; ++l) {
    auto p = ref_softmax(row(s, l));
    for (TokenId t : cands) {
      if (p[t] > best.prob) best = {l, t, p[t]};
    }
  }
  return best;
}

// ---- planted fixtures ---------------------------------------------------------

/// The final layer prefers `hallucinated` by `gap` logits over `truth`; one
/// interval layer puts at least 0.9 of its mass on `truth`; every other layer
/// is led by `hallucinated` with no token above 0.5.
struct FlipFixture {
  LayerwiseStep step;
  TokenId truth = 0;
  TokenId hallucinated = 0;
  std::uint32_t planted_layer = 0;
  float gap = 0;
};

inline FlipFixture make_flip_fixture(std::mt19937_64& g, std::uint32_t layers, std::uint32_t vocab, std::uint32_t lo,
                                     std::uint32_t hi) {
  FlipFixture f;
  f.truth = static_cast<TokenId>(std::uniform_int_distribution<std::uint32_t>(0, vocab - 1)(g));
  do {
    f.hallucinated = static_cast<TokenId>(std::uniform_int_distribution<std::uint32_t>(0, vocab - 1)(g));
  } while (f.hallucinated == f.truth);
  f.planted_layer = std::uniform_int_distribution<std::uint32_t>(lo, hi)(g);
  f.gap = uniform(g, 0.1, 1.0);

  std::vector<std::vector<float>> rows(layers, std::vector<float>(vocab));
  for (std::uint32_t l = 1; l <= layers; ++l) {
    auto& r = rows[l - 1];
    if (l == layers) {
      for (auto& x : r) x = uniform(g, -3.0, -2.0);
      r[f.hallucinated] = 3.0f;
      r[f.truth] = 3.0f - f.gap;
    } else if (l == f.planted_layer) {
      for (auto& x : r) x = uniform(g, -1.0, 0.0);
      double rest = 0;
      for (TokenId t = 0; t < vocab; ++t)
        if (t != f.truth) rest += std::exp(static_cast<double>(r[t]));
      r[f.truth] = static_cast<float>(std::log(9.0 * rest) + 0.5);
    } else {
      for (auto& x : r) x = uniform(g, -1.0, 0.0);
      r[f.hallucinated] = 1.0f;
    }
  }
  f.step = step_from_rows(rows);
  return f;
}

/// Ground truth dominates `planted_layer` with a large logit; every layer is
/// otherwise Gaussian noise.
struct PlantedStep {
  LayerwiseStep step;
  TokenId truth = 0;
  std::uint32_t planted_layer = 0;
};

inline PlantedStep make_planted_step(std::mt19937_64& g, std::uint32_t layers, std::uint32_t vocab) {
  PlantedStep p;
  p.step = random_step(g, layers, vocab, 1.0);
  p.truth = static_cast<TokenId>(std::uniform_int_distribution<std::uint32_t>(0, vocab - 1)(g));
  p.planted_layer = std::uniform_int_distribution<std::uint32_t>(1, layers)(g);
  p.step.early_logits[static_cast<std::size_t>(p.planted_layer - 1) * vocab + p.truth] = 12.0f;
  return p;
}

// ---- metric oracles (exact integer counts) ---------------------------------------

struct Ratio {
  std::uint64_t num = 0, den = 0;
  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};

struct CaptionFixture {
  std::string id;
  std::set<std::string> mentioned, truth, potential;
  bool has_potential = true;
};

inline std::set<std::string> minus(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline std::set<std::string> meet(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

struct ChairOracle {
  Ratio chair_i, chair_s;
};

inline ChairOracle chair_oracle(const std::vector<CaptionFixture>& rs) {
  ChairOracle o;
  for (const auto& r : rs) {
    auto h = minus(r.mentioned, r.truth);
    o.chair_i.num += h.size();
    o.chair_i.den += r.mentioned.size();
    o.chair_s.num += h.empty() ? 0 : 1;
    o.chair_s.den += 1;
  }
  return o;
}

struct AmberOracle {
  Ratio chair, cover, hal, cog;
  double cover_macro = 0;
};

inline AmberOracle amber_oracle(const std::vector<CaptionFixture>& rs) {
  AmberOracle o;
  double macro_sum = 0;
  std::size_t macro_n = 0;
  for (const auto& r : rs) {
    auto h = minus(r.mentioned, r.truth);
    o.chair.num += h.size();
    o.chair.den += r.mentioned.size();
    o.hal.num += h.empty() ? 0 : 1;
    o.hal.den += 1;
    if (!r.truth.empty()) {
      auto c = meet(r.mentioned, r.truth).size();
      o.cover.num += c;
      o.cover.den += r.truth.size();
      macro_sum += static_cast<double>(c) / static_cast<double>(r.truth.size());
      ++macro_n;
    }
    o.cog.num += meet(h, r.has_potential ? r.potential : std::set<std::string>{}).size();
    o.cog.den += h.size();
  }
  o.cover_macro = macro_n == 0 ? 0.0 : macro_sum / static_cast<double>(macro_n);
  return o;
}

struct PopeOracle {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  Ratio precision() const { return {tp, tp + fp}; }
  Ratio recall() const { return {tp, tp + fn}; }
  Ratio accuracy() const { return {tp + tn, tp + fp + tn + fn}; }
  double f1() const {
    double p = precision().value(), r = recall().value();
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
  }
};

}  // namespace fx
