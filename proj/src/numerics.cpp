// SPDX-License-Identifier: Apache-2.0
#include "deco/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deco/error.hpp"

namespace deco {

namespace {

template <typename T>
void check_finite(std::span<const T> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidInput(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

template <typename T>
ProbVector softmax_impl(std::span<const T> logits) {
  if (logits.empty()) throw InvalidInput("softmax: empty input");
  check_finite(logits, "softmax");
  const double hi = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
  ProbVector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - hi);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

template <typename T>
std::size_t argmax_impl(std::span<const T> values) {
  if (values.empty()) throw InvalidInput("argmax: empty input");
  check_finite(values, "argmax");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

void require_finite(std::span<const float> values, const char* what) { check_finite(values, what); }
void require_finite(std::span<const double> values, const char* what) { check_finite(values, what); }

ProbVector softmax(std::span<const float> logits) { return softmax_impl(logits); }
ProbVector softmax(std::span<const double> logits) { return softmax_impl(logits); }

std::vector<double> log_softmax(std::span<const float> logits) {
  if (logits.empty()) throw InvalidInput("log_softmax: empty input");
  check_finite(logits, "log_softmax");
  const double hi = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
  double sum = 0.0;
  for (float v : logits) sum += std::exp(static_cast<double>(v) - hi);
  const double log_z = hi + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - log_z;
  return out;
}

double softmax_max(std::span<const float> logits) {
  if (logits.empty()) throw InvalidInput("softmax: empty input");
  check_finite(logits, "softmax");
  const double hi = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
  double sum = 0.0;
  for (float v : logits) sum += std::exp(static_cast<double>(v) - hi);
  return 1.0 / sum;
}

std::vector<TokenId> top_p_truncate(std::span<const double> probs, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("top_p_truncate: p must lie in (0, 1]");
  if (probs.empty()) throw InvalidInput("top_p_truncate: empty distribution");
  check_finite(probs, "top_p_truncate");

  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return probs[a] > probs[b]; });
  if (p >= 1.0) return order;

  double mass = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    mass += probs[order[k]];
    if (mass >= p) {
      order.resize(k + 1);
      return order;
    }
  }
  // Rounding left the total just short of p: keep everything.
  return order;
}

std::size_t argmax_tiebreak(std::span<const double> values) { return argmax_impl(values); }
std::size_t argmax_tiebreak(std::span<const float> values) { return argmax_impl(values); }

}  // namespace deco
