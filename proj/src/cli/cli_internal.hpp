// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deco/json_io.hpp"
#include "deco/trace.hpp"

namespace deco::cli {

/// Bad flags or flag values; exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A flag whose value only applies when it was given on the command line.
template <class T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;

  bool given() const { return opt != nullptr && opt->count() > 0; }
  void apply(T& target) const {
    if (given()) target = value;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string config_path;
  std::string out_path;
  Flag<std::uint64_t> seed;
  bool verbose = false;
  std::function<void()> action;

  /// Defaults, then --config, then --seed. A config "out" applies when --out
  /// is absent; neither --out nor --verbose is written back into the config.
  RunConfig base_config();
  /// Writes `report` as indented JSON to --out or stdout.
  void emit(const Json& report) const;
  /// Writes one compact JSON document per line.
  void emit_lines(const std::vector<Json>& records) const;
  void log(const std::string& msg) const;
};

/// Runs `fn` and turns InvalidInput/ConfigError into UsageError.
template <class F>
auto usage_check(F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

/// Model-source flags shared by decode, trace record, eval bench and model.
struct ModelFlags {
  Flag<std::string> source;
  Flag<std::string> path;
  Flag<std::uint32_t> layers, hidden_dim, vocab, heads, max_seq_len, visual_vocab;

  void add(CLI::App& app);
  void apply(ModelSource& m) const;
};

/// Decoding and DeCo flags.
struct DecodeFlags {
  Flag<std::string> strategy;
  Flag<std::uint32_t> max_new_tokens, beam_width;
  Flag<double> sampling_top_p, repetition_penalty;
  Flag<std::int64_t> stop_token;
  Flag<std::string> deco;  // on | off
  Flag<double> alpha, deco_top_p;
  Flag<std::uint32_t> layer_lo, layer_hi;
  Flag<std::string> modulation;

  void add(CLI::App& app);
  void apply(RunConfig& c) const;
};

/// Prompt source: --prompts file, else `synthetic` seeded prompts.
struct PromptFlags {
  Flag<std::string> prompts;
  Flag<std::uint32_t> synthetic;
  Flag<std::uint32_t> prompt_len;
  Flag<std::uint32_t> visual_len;

  void add(CLI::App& app, std::uint32_t default_synthetic);
  std::vector<TokenSequence> load(const RunConfig& c, const LayerwiseModel& model, std::uint32_t default_synthetic) const;
};

/// Seeded prompts with a pseudo-visual prefix, independent of the model seed.
std::vector<TokenSequence> synthetic_prompts(std::uint32_t count, std::uint32_t text_len, std::uint32_t visual_len,
                                             std::uint32_t vocab, std::uint32_t visual_vocab, std::uint64_t seed);

std::unique_ptr<LayerwiseModel> open_model(const ModelSource& m);

/// Worker count from DECO_NUM_WORKERS, else the hardware concurrency.
std::size_t num_workers();

/// Calls fn(i) for i in [0, n) on up to num_workers() threads. The first
/// exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

Json report_header(const std::string& command);

/// Trace plus labels for the analysis commands.
struct LabeledTrace {
  std::vector<LayerwiseStep> steps;
  std::vector<StepLabel> labels;
  TraceHeader header;
};

LabeledTrace load_labeled_trace(const std::string& trace, const std::string& labels);

void add_decode(CLI::App& root, Context& ctx);
void add_analyze(CLI::App& root, Context& ctx);
void add_eval(CLI::App& root, Context& ctx);
void add_trace(CLI::App& root, Context& ctx);
void add_model(CLI::App& root, Context& ctx);

}  // namespace deco::cli
