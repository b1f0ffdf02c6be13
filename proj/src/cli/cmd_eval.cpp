// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <map>

#include "cli_internal.hpp"
#include "deco/bench.hpp"
#include "deco/eval.hpp"

namespace deco::cli {
namespace {

struct VocabFlags {
  std::string objects;
  std::string synonyms;

  void add(CLI::App& app) {
    app.add_option("--objects", objects, "Object universe (JSON array of names)");
    app.add_option("--synonyms", synonyms, "Synonym map (JSON object)");
  }

  ObjectVocabulary load() const {
    auto opt = [](const std::string& s) {
      return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
    };
    return read_vocabulary(opt(objects), opt(synonyms));
  }
};

// ---- CHAIR / AMBER ---------------------------------------------------------------

struct CaptionCommand {
  std::string captions;
  VocabFlags vocab;
};

void run_chair(const CaptionCommand& cmd, Context& ctx) {
  ctx.base_config();
  auto records = read_captions(cmd.captions, cmd.vocab.load());
  if (records.empty()) throw DegenerateData(cmd.captions + ": no caption records");
  Json report = report_header("eval chair");
  report["inputs"] = Json{{"captions", cmd.captions}};
  merge(report, to_json(chair_score(records)));
  ctx.emit(report);
}

void run_amber(const CaptionCommand& cmd, Context& ctx) {
  ctx.base_config();
  auto records = read_captions(cmd.captions, cmd.vocab.load());
  if (records.empty()) throw DegenerateData(cmd.captions + ": no caption records");
  AmberReport r = amber_score(records);
  Json report = report_header("eval amber");
  report["inputs"] = Json{{"captions", cmd.captions}};
  merge(report, to_json(r));
  Json warnings = Json::array();
  for (const auto& rec : records)
    if (rec.ground_truth.empty()) warnings.push_back("image " + rec.image_id + ": empty ground truth, excluded from cover");
  report["warnings"] = warnings;
  ctx.emit(report);
}

// ---- POPE ----------------------------------------------------------------------------

struct PopeGenCommand {
  std::string annotations;
  std::string frequency;
  std::string cooccurrence;
  std::string split;
  std::uint32_t k = 6;
  VocabFlags vocab;
};

std::map<std::string, std::uint64_t> read_counts(const std::string& path, const Json& j, const ObjectVocabulary& vocab) {
  if (!j.is_object()) throw FormatError(path + ": expected an object of name -> count");
  std::map<std::string, std::uint64_t> out;
  for (const auto& [name, v] : j.items()) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw FormatError(path + ": '" + name + "': expected a non-negative integer count");
    out[vocab.normalize(name)] += v.get<std::uint64_t>();
  }
  return out;
}

void run_pope_gen(const PopeGenCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  PopeSplit split = usage_check([&] { return parse_pope_split(cmd.split); });
  if (cmd.k < 2 || cmd.k % 2 != 0) throw UsageError("--k must be even and at least 2");
  ObjectVocabulary vocab = cmd.vocab.load();
  auto images = read_image_objects(cmd.annotations, vocab);

  std::map<std::string, std::uint64_t> freq;
  if (!cmd.frequency.empty()) {
    freq = read_counts(cmd.frequency, read_json_file(cmd.frequency), vocab);
  } else {
    for (const auto& img : images)
      for (const auto& o : img.objects) ++freq[o];
  }
  for (const auto& o : vocab.universe()) freq.emplace(o, 0);
  for (const auto& img : images)
    for (const auto& o : img.objects) freq.emplace(o, 0);

  std::map<std::string, std::map<std::string, std::uint64_t>> cooc;
  if (!cmd.cooccurrence.empty()) {
    Json j = read_json_file(cmd.cooccurrence);
    if (!j.is_object()) throw FormatError(cmd.cooccurrence + ": expected an object of name -> {name: count}");
    for (const auto& [a, row] : j.items())
      for (const auto& [b, n] : read_counts(cmd.cooccurrence, row, vocab)) cooc[vocab.normalize(a)][b] += n;
  } else {
    for (const auto& img : images)
      for (const auto& a : img.objects)
        for (const auto& b : img.objects)
          if (a != b) ++cooc[a][b];
  }
  if (split == PopeSplit::kAdversarial && cooc.empty())
    throw DegenerateData("adversarial split: no object co-occurs with another");

  PopeGeneration gen = pope_generate(images, freq, cooc, split, cmd.k, c.decode.seed);
  for (const auto& w : gen.warnings) ctx.err << "decotk: warning: " << w << "\n";
  std::vector<Json> lines;
  for (const auto& item : gen.items) lines.push_back(to_json(item));
  ctx.emit_lines(lines);
}

struct PopeScoreCommand {
  std::string items;
};

void run_pope_score(const PopeScoreCommand& cmd, Context& ctx) {
  ctx.base_config();
  auto items = read_pope_items(cmd.items);
  if (items.empty()) throw DegenerateData(cmd.items + ": no items");
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!items[i].answer) throw FormatError(cmd.items + ": item " + std::to_string(i + 1) + " has no answer");
  Json splits = Json::object();
  for (const auto& [name, score] : pope_f1(items)) splits[name] = to_json(score);
  Json report = report_header("eval pope-score");
  report["inputs"] = Json{{"items", cmd.items}, {"count", items.size()}};
  report["splits"] = splits;
  ctx.emit(report);
}

// ---- bench -----------------------------------------------------------------------

struct BenchCommand {
  ModelFlags model;
  DecodeFlags decode;
  PromptFlags prompts;
  std::uint32_t runs = 20;
  std::uint32_t warmup = 2;
  double min_run_ms = 20.0;
  bool self = false;
};

void run_bench(const BenchCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  cmd.model.apply(c.model);
  cmd.decode.apply(c);
  cmd.prompts.prompts.apply(c.prompts);
  if (cmd.runs == 0) throw UsageError("--runs must be positive");
  if (!(cmd.min_run_ms >= 0)) throw UsageError("--min-run-ms must be non-negative");
  auto model = open_model(c.model);
  usage_check([&] { resolve(c.deco, model->num_layers()); });
  auto prompts = cmd.prompts.load(c, *model, 10);
  if (prompts.size() < 10) throw UsageError("bench needs at least 10 prompts");

  DecoConfig baseline = c.deco;
  baseline.enabled = false;
  DecoConfig candidate = c.deco;
  candidate.enabled = !cmd.self;
  BenchConfig bc;
  bc.runs = cmd.runs;
  bc.warmup_runs = cmd.warmup;
  bc.min_run_time = std::chrono::nanoseconds(static_cast<std::int64_t>(cmd.min_run_ms * 1e6));
  ctx.log("benchmarking " + std::to_string(prompts.size()) + " prompts, " + std::to_string(cmd.runs) + " runs");
  BenchReport r = bench(*model, prompts, c.decode, baseline, candidate, bc);

  Json report = report_header("eval bench");
  report["config"] = to_json(c);
  report["params"] = Json{{"runs", cmd.runs},
                          {"warmup_runs", cmd.warmup},
                          {"prompts", prompts.size()},
                          {"baseline", "deco off"},
                          {"candidate", cmd.self ? "deco off" : "deco on"}};
  // Every measured number is wall-clock and lives under "timing".
  report["timing"] = to_json(r);
  ctx.emit(report);
}

template <class Cmd, class Run>
void bind(CLI::App* sub, std::shared_ptr<Cmd> cmd, Context& ctx, Run run) {
  sub->callback([cmd, &ctx, run] { ctx.action = [cmd, &ctx, run] { run(*cmd, ctx); }; });
}

}  // namespace

void add_eval(CLI::App& root, Context& ctx) {
  CLI::App* eval = root.add_subcommand("eval", "Hallucination metrics and benchmarking");
  eval->require_subcommand(1);

  auto chair = std::make_shared<CaptionCommand>();
  CLI::App* ch = eval->add_subcommand("chair", "CHAIR_I and CHAIR_S over captions");
  ch->add_option("--captions", chair->captions, "JSON-lines caption records")->required();
  chair->vocab.add(*ch);
  bind(ch, chair, ctx, run_chair);

  auto amber = std::make_shared<CaptionCommand>();
  CLI::App* am = eval->add_subcommand("amber", "CHAIR, Cover, Hal and Cog over captions");
  am->add_option("--captions", amber->captions, "JSON-lines caption records")->required();
  amber->vocab.add(*am);
  bind(am, amber, ctx, run_amber);

  auto gen = std::make_shared<PopeGenCommand>();
  CLI::App* pg = eval->add_subcommand("pope-gen", "Generate polling questions");
  pg->add_option("--annotations", gen->annotations, "JSON-lines {image_id, ground_truth}")->required();
  pg->add_option("--frequency", gen->frequency, "Object frequency table (JSON); default: counted from annotations");
  pg->add_option("--cooccurrence", gen->cooccurrence, "Co-occurrence table (JSON); default: counted from annotations");
  pg->add_option("--split", gen->split, "random, popular or adversarial")->required();
  pg->add_option("--k", gen->k, "Questions per image (even)");
  gen->vocab.add(*pg);
  bind(pg, gen, ctx, run_pope_gen);

  auto score = std::make_shared<PopeScoreCommand>();
  CLI::App* ps = eval->add_subcommand("pope-score", "Precision, recall, F1 and accuracy per split");
  ps->add_option("--items", score->items, "JSON-lines answered items")->required();
  bind(ps, score, ctx, run_pope_score);

  auto b = std::make_shared<BenchCommand>();
  CLI::App* bn = eval->add_subcommand("bench", "Per-token latency with and without correction");
  b->model.add(*bn);
  b->decode.add(*bn);
  b->prompts.add(*bn, 10);
  bn->add_option("--runs", b->runs, "Timed runs per side");
  bn->add_option("--warmup", b->warmup, "Discarded warmup runs");
  bn->add_option("--min-run-ms", b->min_run_ms, "Floor on a timed run's duration");
  bn->add_flag("--self", b->self, "Compare correction-off against itself");
  bind(bn, b, ctx, run_bench);
}

}  // namespace deco::cli
