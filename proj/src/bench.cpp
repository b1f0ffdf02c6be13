// SPDX-License-Identifier: Apache-2.0
#include "deco/bench.hpp"

#include <algorithm>

#include "deco/error.hpp"

namespace deco {

namespace {

struct RunResult {
  std::chrono::nanoseconds elapsed;
  std::uint64_t tokens;
};

RunResult run_once(const LayerwiseModel& model, const std::vector<TokenSequence>& prompts, const DecodeConfig& dcfg,
                   const DecoConfig& deco, std::uint32_t repeats) {
  std::uint64_t tokens = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint32_t r = 0; r < repeats; ++r) {
    for (const auto& p : prompts) tokens += decode(model, p, dcfg, deco).tokens.size();
  }
  return {std::chrono::steady_clock::now() - t0, tokens};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BenchSide summarize(const std::vector<double>& latencies) {
  BenchSide s;
  s.run_latencies_s = latencies;
  s.latency_per_token_s = median(latencies);
  s.throughput_tok_s = s.latency_per_token_s > 0.0 ? 1.0 / s.latency_per_token_s : 0.0;
  return s;
}

}  // namespace

BenchReport bench(const LayerwiseModel& model, const std::vector<TokenSequence>& prompts, const DecodeConfig& dcfg,
                  const DecoConfig& baseline, const DecoConfig& candidate, const BenchConfig& cfg) {
  if (prompts.size() < 10) throw InvalidInput("bench: need at least 10 prompts");
  if (cfg.runs == 0) throw InvalidInput("bench: runs must be positive");

  BenchReport rep;
  // Warm up and grow the repeat count until one run clears the timer floor.
  for (std::uint32_t w = 0; w < std::max<std::uint32_t>(cfg.warmup_runs, 1); ++w) {
    RunResult r = run_once(model, prompts, dcfg, baseline, rep.repeats_per_run);
    while (r.elapsed < cfg.min_run_time && rep.repeats_per_run < (1u << 20)) {
      rep.repeats_per_run *= 2;
      r = run_once(model, prompts, dcfg, baseline, rep.repeats_per_run);
    }
    run_once(model, prompts, dcfg, candidate, rep.repeats_per_run);
  }

  std::vector<double> base_lat, cand_lat;
  for (std::uint32_t i = 0; i < cfg.runs; ++i) {
    const bool base_first = i % 2 == 0;
    RunResult a{}, b{};
    if (base_first) {
      a = run_once(model, prompts, dcfg, baseline, rep.repeats_per_run);
      b = run_once(model, prompts, dcfg, candidate, rep.repeats_per_run);
    } else {
      b = run_once(model, prompts, dcfg, candidate, rep.repeats_per_run);
      a = run_once(model, prompts, dcfg, baseline, rep.repeats_per_run);
    }
    if (a.tokens == 0 || b.tokens == 0) throw InvalidInput("bench: a run generated no tokens");
    base_lat.push_back(std::chrono::duration<double>(a.elapsed).count() / static_cast<double>(a.tokens));
    cand_lat.push_back(std::chrono::duration<double>(b.elapsed).count() / static_cast<double>(b.tokens));
    rep.tokens_per_run = a.tokens;
  }
  rep.baseline = summarize(base_lat);
  rep.candidate = summarize(cand_lat);
  rep.ratio = rep.candidate.latency_per_token_s / rep.baseline.latency_per_token_s;
  return rep;
}

}  // namespace deco
