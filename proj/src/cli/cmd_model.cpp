// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "cli_internal.hpp"
#include "deco/toy_model.hpp"

namespace deco::cli {
namespace {

struct DumpCommand {
  ModelFlags model;
  std::string dir;
};

ToyModel build_toy(const ModelFlags& flags, Context& ctx) {
  RunConfig c = ctx.base_config();
  flags.apply(c.model);
  if (c.model.kind == ModelSource::Kind::kTrace) throw UsageError("a trace has no weights");
  if (c.model.kind == ModelSource::Kind::kWeights) return ToyModel::load_weights(c.model.path);
  return ToyModel(c.model.toy);
}

void run_dump(const DumpCommand& cmd, Context& ctx) {
  ToyModel model = build_toy(cmd.model, ctx);
  std::filesystem::create_directories(cmd.dir);
  model.save_weights(cmd.dir);
  Json report = report_header("model dump");
  report["dir"] = cmd.dir;
  report["model"] = to_json(model.config());
  ctx.emit(report);
}

struct ForwardCommand {
  ModelFlags model;
  std::string prompt;
  std::uint32_t visual_prefix_len = 0;
  bool hidden = false;
};

std::vector<TokenId> parse_ids(const std::string& s) {
  std::vector<TokenId> ids;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(part, &used);
      if (used != part.size() || v > 0xffffffffUL) throw std::out_of_range(part);
      ids.push_back(static_cast<TokenId>(v));
    } catch (const std::exception&) {
      throw UsageError("--prompt: '" + part + "' is not a token id");
    }
  }
  if (ids.empty()) throw UsageError("--prompt is empty");
  return ids;
}

void run_forward(const ForwardCommand& cmd, Context& ctx) {
  ToyModel model = build_toy(cmd.model, ctx);
  TokenSequence seq{parse_ids(cmd.prompt), cmd.visual_prefix_len};
  if (seq.visual_prefix_len > seq.ids.size()) throw UsageError("--visual-prefix-len exceeds the prompt length");
  LayerwiseStep step = model.forward(seq, cmd.hidden);
  Json layers = Json::array();
  for (std::uint32_t l = 1; l <= step.num_layers; ++l) {
    auto row = step.layer_logits(l);
    layers.push_back(std::vector<float>(row.begin(), row.end()));
  }
  Json report = report_header("model forward");
  report["model"] = to_json(model.config());
  report["prompt_tokens"] = seq.ids;
  report["visual_prefix_len"] = seq.visual_prefix_len;
  report["logits"] = layers;
  if (cmd.hidden) {
    Json hidden = Json::array();
    for (std::uint32_t l = 1; l <= step.num_layers; ++l) {
      auto row = step.layer_hidden(l);
      hidden.push_back(std::vector<float>(row.begin(), row.end()));
    }
    report["hidden"] = hidden;
  }
  ctx.emit(report);
}

}  // namespace

void add_model(CLI::App& root, Context& ctx) {
  CLI::App* model = root.add_subcommand("model", "Toy model weight dumps and single forwards");
  model->require_subcommand(1);

  auto dump = std::make_shared<DumpCommand>();
  CLI::App* d = model->add_subcommand("dump", "Write manifest.json and weights.bin");
  dump->model.add(*d);
  d->add_option("--dir", dump->dir, "Output directory")->required();
  d->callback([dump, &ctx] { ctx.action = [dump, &ctx] { run_dump(*dump, ctx); }; });

  auto fwd = std::make_shared<ForwardCommand>();
  CLI::App* f = model->add_subcommand("forward", "Per-layer logits at the last position of one prompt");
  fwd->model.add(*f);
  f->add_option("--prompt", fwd->prompt, "Comma-separated token ids")->required();
  f->add_option("--visual-prefix-len", fwd->visual_prefix_len, "Leading ids that are visual tokens");
  f->add_flag("--hidden", fwd->hidden, "Include hidden states");
  f->callback([fwd, &ctx] { ctx.action = [fwd, &ctx] { run_forward(*fwd, ctx); }; });
}

}  // namespace deco::cli
