// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "cli_internal.hpp"
#include "deco/cli.hpp"
#include "deco/rng.hpp"
#include "deco/toy_model.hpp"
#include "deco/version.hpp"

namespace deco::cli {

RunConfig Context::base_config() {
  RunConfig c;
  if (!config_path.empty()) c = usage_check([&] { return run_config_from_json(read_json_file(config_path)); });
  if (seed.given()) {
    c.model.toy.seed = seed.value;
    c.decode.seed = seed.value;
  }
  if (out_path.empty()) out_path = c.out;
  verbose = verbose || c.verbose;
  return c;
}

namespace {

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    out.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace

void Context::emit(const Json& report) const { write_text(out_path, report.dump(2) + "\n", out); }

void Context::emit_lines(const std::vector<Json>& records) const {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  write_text(out_path, text, out);
}

void Context::log(const std::string& msg) const {
  if (verbose) err << "decotk: " << msg << "\n";
}

// ---- shared flags --------------------------------------------------------------

void ModelFlags::add(CLI::App& app) {
  source.opt = app.add_option("--model", source.value, "Model source: toy, trace or weights");
  source.opt->check(CLI::IsMember({"toy", "trace", "weights"}));
  path.opt = app.add_option("--model-path", path.value, "Trace file or weight-dump directory");
  layers.opt = app.add_option("--layers", layers.value, "Toy model depth");
  hidden_dim.opt = app.add_option("--hidden-dim", hidden_dim.value, "Toy model width");
  vocab.opt = app.add_option("--vocab", vocab.value, "Toy model vocabulary size");
  heads.opt = app.add_option("--heads", heads.value, "Toy model attention heads");
  max_seq_len.opt = app.add_option("--max-seq-len", max_seq_len.value, "Toy model context length");
  visual_vocab.opt = app.add_option("--visual-vocab", visual_vocab.value, "Pseudo-visual token table size");
}

void ModelFlags::apply(ModelSource& m) const {
  if (source.given()) {
    if (source.value == "toy") m.kind = ModelSource::Kind::kToy;
    if (source.value == "trace") m.kind = ModelSource::Kind::kTrace;
    if (source.value == "weights") m.kind = ModelSource::Kind::kWeights;
  }
  path.apply(m.path);
  layers.apply(m.toy.num_layers);
  hidden_dim.apply(m.toy.hidden_dim);
  vocab.apply(m.toy.vocab_size);
  heads.apply(m.toy.num_heads);
  max_seq_len.apply(m.toy.max_seq_len);
  visual_vocab.apply(m.toy.visual_vocab_size);
  if (m.kind == ModelSource::Kind::kToy) {
    if (path.given()) throw UsageError("--model-path needs --model trace or --model weights");
    m.path.clear();
    usage_check([&] { m.toy.validate(); });
  } else if (m.path.empty()) {
    throw UsageError("--model-path is required for this model source");
  }
}

void DecodeFlags::add(CLI::App& app) {
  strategy.opt = app.add_option("--strategy", strategy.value, "greedy, nucleus or beam");
  max_new_tokens.opt = app.add_option("--max-new-tokens", max_new_tokens.value, "Tokens to generate per prompt");
  sampling_top_p.opt = app.add_option("--sampling-top-p", sampling_top_p.value, "Nucleus mass for sampling");
  beam_width.opt = app.add_option("--beam-width", beam_width.value, "Beam width");
  repetition_penalty.opt = app.add_option("--repetition-penalty", repetition_penalty.value, "Penalty >= 1");
  stop_token.opt = app.add_option("--stop-token", stop_token.value, "Stop after emitting this token (-1: none)");
  deco.opt = app.add_option("--deco", deco.value, "Dynamic correction on or off");
  deco.opt->check(CLI::IsMember({"on", "off"}));
  alpha.opt = app.add_option("--alpha", alpha.value, "Correction strength");
  deco_top_p.opt = app.add_option("--top-p", deco_top_p.value, "Candidate mass for the anchor search");
  layer_lo.opt = app.add_option("--layer-lo", layer_lo.value, "First anchor layer (1-based)");
  layer_hi.opt = app.add_option("--layer-hi", layer_hi.value, "Last anchor layer (1-based)");
  modulation.opt = app.add_option("--modulation", modulation.value, "max_prob or none");
}

void DecodeFlags::apply(RunConfig& c) const {
  usage_check([&] {
    if (strategy.given()) c.decode.strategy = parse_strategy(strategy.value);
    if (modulation.given()) c.deco.modulation = parse_modulation(modulation.value);
  });
  max_new_tokens.apply(c.decode.max_new_tokens);
  sampling_top_p.apply(c.decode.sampling_top_p);
  beam_width.apply(c.decode.beam_width);
  repetition_penalty.apply(c.decode.repetition_penalty);
  if (stop_token.given()) {
    if (stop_token.value < 0)
      c.decode.stop_token.reset();
    else
      c.decode.stop_token = static_cast<TokenId>(stop_token.value);
  }
  if (deco.given()) c.deco.enabled = deco.value == "on";
  alpha.apply(c.deco.alpha);
  deco_top_p.apply(c.deco.top_p);
  layer_lo.apply(c.deco.layer_lo);
  layer_hi.apply(c.deco.layer_hi);
  // Re-validate the merged result through the config readers.
  usage_check([&] {
    c.decode = decode_config_from_json(to_json(c.decode));
    c.deco = deco_config_from_json(to_json(c.deco));
  });
}

void PromptFlags::add(CLI::App& app, std::uint32_t default_synthetic) {
  prompts.opt = app.add_option("--prompts", prompts.value, "JSON-lines prompt file");
  synthetic.opt = app.add_option("--synthetic", synthetic.value,
                                 "Number of seeded synthetic prompts when no file is given (default " +
                                     std::to_string(default_synthetic) + ")");
  prompt_len.opt = app.add_option("--prompt-len", prompt_len.value, "Text tokens per synthetic prompt (default 8)");
  visual_len.opt = app.add_option("--visual-len", visual_len.value, "Visual tokens per synthetic prompt (default 4)");
}

std::vector<TokenSequence> PromptFlags::load(const RunConfig& c, const LayerwiseModel& model,
                                             std::uint32_t default_synthetic) const {
  std::string file = prompts.given() ? prompts.value : c.prompts;
  std::vector<TokenSequence> out;
  if (!file.empty()) {
    if (synthetic.given()) throw UsageError("--synthetic and a prompt file are mutually exclusive");
    out = read_prompts(file);
    if (out.empty()) throw UsageError(file + ": no prompts");
  } else {
    std::uint32_t visual_vocab = c.model.kind == ModelSource::Kind::kToy ? c.model.toy.visual_vocab_size : 16;
    out = synthetic_prompts(synthetic.given() ? synthetic.value : default_synthetic,
                            prompt_len.given() ? prompt_len.value : 8, visual_len.given() ? visual_len.value : 4,
                            model.vocab_size(), visual_vocab, c.decode.seed);
    if (out.empty()) throw UsageError("--synthetic must be positive");
  }
  return out;
}

std::vector<TokenSequence> synthetic_prompts(std::uint32_t count, std::uint32_t text_len, std::uint32_t visual_len,
                                             std::uint32_t vocab, std::uint32_t visual_vocab, std::uint64_t seed) {
  if (text_len + visual_len == 0) throw UsageError("synthetic prompts need at least one token");
  Rng rng(seed, Rng::Stream::kFixtures);
  std::vector<TokenSequence> out(count);
  for (auto& p : out) {
    p.visual_prefix_len = visual_len;
    for (std::uint32_t i = 0; i < visual_len; ++i) p.ids.push_back(static_cast<TokenId>(rng.below(visual_vocab)));
    for (std::uint32_t i = 0; i < text_len; ++i) p.ids.push_back(static_cast<TokenId>(rng.below(vocab)));
  }
  return out;
}

std::unique_ptr<LayerwiseModel> open_model(const ModelSource& m) {
  switch (m.kind) {
    case ModelSource::Kind::kToy:
      return std::make_unique<ToyModel>(m.toy);
    case ModelSource::Kind::kTrace:
      return std::make_unique<TraceReplayModel>(TraceReplayModel::open(m.path));
    case ModelSource::Kind::kWeights:
      return std::make_unique<ToyModel>(ToyModel::load_weights(m.path));
  }
  throw UsageError("unknown model source");
}

std::size_t num_workers() {
  if (const char* env = std::getenv("DECO_NUM_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    unsigned long n = std::strtoul(env, &end, 10);
    if (*end != '\0' || n == 0) throw UsageError(std::string("DECO_NUM_WORKERS must be a positive integer, got '") + env + "'");
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min(num_workers(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

Json report_header(const std::string& command) {
  return Json{{"toolkit", "decotk"}, {"version", kVersion}, {"command", command}};
}

LabeledTrace load_labeled_trace(const std::string& trace, const std::string& labels) {
  LabeledTrace lt;
  TraceReader reader(trace);
  lt.header = reader.header();
  for (std::uint32_t i = 0; i < reader.num_steps(); ++i) lt.steps.push_back(reader.read_step(i));
  lt.labels = read_labels(labels);
  for (std::size_t k = 0; k < lt.labels.size(); ++k) {
    const StepLabel& l = lt.labels[k];
    std::string where = labels + ": record " + std::to_string(k + 1) + ": ";
    if (l.step_index >= lt.header.num_steps)
      throw FormatError(where + "step_index " + std::to_string(l.step_index) + " outside the trace's " +
                        std::to_string(lt.header.num_steps) + " steps");
    for (TokenId t : l.ground_truth_tokens)
      if (t >= lt.header.vocab_size)
        throw FormatError(where + "ground-truth token " + std::to_string(t) + " outside the trace vocabulary of " +
                          std::to_string(lt.header.vocab_size));
    if (l.hallucinated_token && *l.hallucinated_token >= lt.header.vocab_size)
      throw FormatError(where + "hallucinated_token outside the trace vocabulary");
  }
  return lt;
}

}  // namespace deco::cli

namespace deco {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  cli::Context ctx{out, err, {}, {}, {}, false, {}};
  CLI::App app{"Dynamic correction decoding toolkit", "decotk"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.add_option("--config", ctx.config_path, "Run configuration (JSON)");
  app.add_option("--out", ctx.out_path, "Write the report here instead of stdout");
  ctx.seed.opt = app.add_option("--seed", ctx.seed.value, "Seed for the toy model and sampling");
  app.add_flag("--verbose,-v", ctx.verbose, "Progress messages on stderr");

  cli::add_decode(app, ctx);
  cli::add_analyze(app, ctx);
  cli::add_eval(app, ctx);
  cli::add_trace(app, ctx);
  cli::add_model(app, ctx);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    err << "decotk: " << e.what() << "\n";
    return 2;
  }

  try {
    if (!ctx.action) throw cli::UsageError("no command given");
    ctx.action();
    return 0;
  } catch (const cli::UsageError& e) {
    err << "decotk: usage: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "decotk: config: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "decotk: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "decotk: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace deco
