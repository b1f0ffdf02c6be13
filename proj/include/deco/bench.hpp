// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "deco/decoding.hpp"

namespace deco {

struct BenchConfig {
  std::uint32_t runs = 20;
  std::uint32_t warmup_runs = 2;
  /// A timed run shorter than this repeats the prompt set until it is not.
  std::chrono::nanoseconds min_run_time = std::chrono::milliseconds(20);
};

struct BenchSide {
  double latency_per_token_s = 0.0;  // median over runs
  double throughput_tok_s = 0.0;     // 1 / median latency
  std::vector<double> run_latencies_s;
};

struct BenchReport {
  BenchSide baseline;
  BenchSide candidate;
  double ratio = 0.0;  // candidate latency / baseline latency
  std::uint32_t repeats_per_run = 1;
  std::uint64_t tokens_per_run = 0;
};

/// Times decoding of `prompts` under two DeCo configurations, alternating
/// which side runs first. Needs at least ten prompts; warmup runs are
/// discarded.
BenchReport bench(const LayerwiseModel& model, const std::vector<TokenSequence>& prompts, const DecodeConfig& dcfg,
                  const DecoConfig& baseline, const DecoConfig& candidate, const BenchConfig& cfg = {});

}  // namespace deco
