// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace deco {

using TokenId = std::uint32_t;

/// Per-token scores over the vocabulary. Stored in single precision, matching
/// the width of recorded traces.
using LogitsVector = std::vector<float>;

/// Normalized next-token distribution.
using ProbVector = std::vector<double>;

/// Max-subtracted softmax. Throws InvalidInput on empty or non-finite input.
ProbVector softmax(std::span<const float> logits);
ProbVector softmax(std::span<const double> logits);

/// log(softmax(x)) computed as x - max - log(sum(exp(x - max))).
std::vector<double> log_softmax(std::span<const float> logits);

/// Largest probability of softmax(logits) without materializing the vector.
double softmax_max(std::span<const float> logits);

/// Nucleus truncation: the smallest prefix of tokens, ordered by descending
/// probability (ties by ascending id), whose cumulative mass reaches `p`.
/// `p` must lie in (0, 1].
std::vector<TokenId> top_p_truncate(std::span<const double> probs, double p);

/// Index of the maximum; ties resolve to the smallest index.
std::size_t argmax_tiebreak(std::span<const double> values);
std::size_t argmax_tiebreak(std::span<const float> values);

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(std::span<const float> values, const char* what);
void require_finite(std::span<const double> values, const char* what);

}  // namespace deco
