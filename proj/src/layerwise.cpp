// SPDX-License-Identifier: Apache-2.0
#include "deco/layerwise.hpp"

#include <string>

#include "deco/error.hpp"

namespace deco {

std::span<const float> LayerwiseStep::layer_logits(std::uint32_t layer) const {
  if (!has_layer(layer)) {
    throw InvalidInput("layer " + std::to_string(layer) + " not present in step (rows " +
                       std::to_string(first_layer) + ".." + std::to_string(num_layers) + ")");
  }
  const std::size_t row = layer - first_layer;
  return std::span(early_logits).subspan(row * vocab_size, vocab_size);
}

std::span<const float> LayerwiseStep::layer_hidden(std::uint32_t layer) const {
  if (!has_hidden() || layer < 1 || layer > num_layers) {
    throw InvalidInput("hidden state for layer " + std::to_string(layer) + " not present");
  }
  return std::span(hidden).subspan(std::size_t{layer - 1} * hidden_dim, hidden_dim);
}

void LayerwiseStep::validate() const {
  if (num_layers == 0 || vocab_size == 0) throw InvalidInput("step: empty shape");
  if (first_layer < 1 || first_layer > num_layers) throw InvalidInput("step: bad first_layer");
  if (early_logits.size() != std::size_t{rows()} * vocab_size) {
    throw InvalidInput("step: early_logits size does not match rows x vocab");
  }
  if (hidden.size() != std::size_t{num_layers} * hidden_dim) {
    throw InvalidInput("step: hidden size does not match layers x hidden_dim");
  }
  require_finite(std::span<const float>(early_logits), "step logits");
  require_finite(std::span<const float>(hidden), "step hidden");
}

LayerwiseStep LayerwiseModel::forward(const TokenSequence& seq, bool want_hidden) const {
  auto session = start(seq);
  return session->readout(ReadoutSpec{1, want_hidden});
}

}  // namespace deco
