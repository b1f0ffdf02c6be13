// SPDX-License-Identifier: Apache-2.0
#include "cli_internal.hpp"

namespace deco::cli {
namespace {

struct RecordCommand {
  ModelFlags model;
  DecodeFlags decode;
  PromptFlags prompts;
  std::string trace;
  bool hidden = false;
};

void run_record(const RecordCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  cmd.model.apply(c.model);
  cmd.decode.apply(c);
  cmd.prompts.prompts.apply(c.prompts);
  if (c.decode.strategy == Strategy::kBeam) throw UsageError("trace record supports greedy and nucleus decoding");

  auto model = open_model(c.model);
  usage_check([&] { resolve(c.deco, model->num_layers()); });
  if (cmd.hidden && model->hidden_dim() == 0) throw UsageError("--hidden: the model has no hidden states");
  auto prompts = cmd.prompts.load(c, *model, 1);

  TraceWriter writer(cmd.trace, model->num_layers(), model->vocab_size(), cmd.hidden ? model->hidden_dim() : 0);
  deco::DecodeOptions options;
  options.full_readout = true;
  options.want_hidden = cmd.hidden;
  options.observer = [&](const LayerwiseStep& step) { writer.append(step); };

  Json runs = Json::array();
  std::uint32_t first = 0;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    DecodeResult r = decode(*model, prompts[i], c.decode, c.deco, options);
    auto n = static_cast<std::uint32_t>(r.tokens.size());
    runs.push_back(Json{{"prompt_index", i},
                        {"prompt_tokens", prompts[i].ids},
                        {"visual_prefix_len", prompts[i].visual_prefix_len},
                        {"first_step", first},
                        {"num_steps", n},
                        {"tokens", r.tokens}});
    first += n;
    ctx.log("prompt " + std::to_string(i) + ": " + std::to_string(n) + " steps");
  }
  writer.finish();

  Json report = report_header("trace record");
  report["config"] = to_json(c);
  report["trace"] = Json{{"num_layers", model->num_layers()},
                         {"vocab_size", model->vocab_size()},
                         {"hidden_dim", cmd.hidden ? model->hidden_dim() : 0},
                         {"num_steps", first}};
  report["runs"] = runs;
  ctx.emit(report);
}

struct InspectCommand {
  std::string trace;
  std::uint32_t max_steps = 16;
};

void run_inspect(const InspectCommand& cmd, Context& ctx) {
  ctx.base_config();
  TraceReader reader(cmd.trace);
  const TraceHeader& h = reader.header();
  Json steps = Json::array();
  for (std::uint32_t i = 0; i < h.num_steps; ++i) {
    // Every step is read so the whole payload is validated.
    LayerwiseStep s = reader.read_step(i);
    if (i >= cmd.max_steps) continue;
    auto final = s.final_logits();
    ProbVector p = softmax(final);
    TokenId top = argmax_tiebreak(std::span<const double>(p));
    steps.push_back(Json{{"index", i}, {"final_argmax", top}, {"final_max_prob", p[top]}});
  }
  Json report = report_header("trace inspect");
  report["header"] = Json{{"version", h.version},       {"num_layers", h.num_layers}, {"vocab_size", h.vocab_size},
                          {"hidden_dim", h.hidden_dim}, {"num_steps", h.num_steps},   {"flags", h.flags},
                          {"has_hidden", h.has_hidden()}};
  report["file_bytes"] = h.file_bytes();
  report["steps"] = steps;
  ctx.emit(report);
}

}  // namespace

void add_trace(CLI::App& root, Context& ctx) {
  CLI::App* trace = root.add_subcommand("trace", "Record and inspect LWT1 layerwise traces");
  trace->require_subcommand(1);

  auto rec = std::make_shared<RecordCommand>();
  CLI::App* r = trace->add_subcommand("record", "Decode and dump every step's per-layer logits");
  rec->model.add(*r);
  rec->decode.add(*r);
  rec->prompts.add(*r, 1);
  r->add_option("--trace", rec->trace, "Output trace file")->required();
  r->add_flag("--hidden", rec->hidden, "Also store hidden states");
  r->callback([rec, &ctx] { ctx.action = [rec, &ctx] { run_record(*rec, ctx); }; });

  auto ins = std::make_shared<InspectCommand>();
  CLI::App* i = trace->add_subcommand("inspect", "Validate a trace and summarize it");
  i->add_option("trace", ins->trace, "Trace file")->required();
  i->add_option("--max-steps", ins->max_steps, "Steps to summarize");
  i->callback([ins, &ctx] { ctx.action = [ins, &ctx] { run_inspect(*ins, ctx); }; });
}

}  // namespace deco::cli
