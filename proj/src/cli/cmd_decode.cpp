// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <map>

#include "cli_internal.hpp"

namespace deco::cli {
namespace {

struct DecodeCommand {
  ModelFlags model;
  DecodeFlags decode;
  PromptFlags prompts;
};

void run_decode(const DecodeCommand& cmd, Context& ctx) {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig c = ctx.base_config();
  cmd.model.apply(c.model);
  cmd.decode.apply(c);
  cmd.prompts.prompts.apply(c.prompts);

  auto model = open_model(c.model);
  usage_check([&] { resolve(c.deco, model->num_layers()); });
  auto prompts = cmd.prompts.load(c, *model, 1);
  ctx.log("decoding " + std::to_string(prompts.size()) + " prompt(s) on " + std::to_string(num_workers()) +
          " worker(s)");

  std::vector<DecodeResult> results(prompts.size());
  parallel_for(prompts.size(), [&](std::size_t i) { results[i] = decode(*model, prompts[i], c.decode, c.deco); });

  Json report = report_header("decode");
  report["config"] = to_json(c);
  Json items = Json::array();
  Json durations = Json::array();
  std::map<std::uint32_t, std::size_t> histogram;
  std::size_t generated = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Json item{{"prompt_index", i},
              {"prompt_tokens", prompts[i].ids},
              {"visual_prefix_len", prompts[i].visual_prefix_len}};
    merge(item, to_json(results[i], false));
    items.push_back(item);
    durations.push_back(std::chrono::duration<double>(results[i].duration).count());
    generated += results[i].tokens.size();
    for (const auto& a : results[i].anchors)
      if (a.valid()) ++histogram[a.anchor_layer];
  }
  report["results"] = items;
  Json hist = Json::object();
  for (auto [layer, n] : histogram) hist[std::to_string(layer)] = n;
  report["summary"] = Json{{"prompts", prompts.size()}, {"generated_tokens", generated}, {"anchor_layers", hist}};
  report["timing"] = Json{{"wall_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                          {"per_prompt_s", durations}};
  ctx.emit(report);
}

}  // namespace

void add_decode(CLI::App& root, Context& ctx) {
  auto cmd = std::make_shared<DecodeCommand>();
  CLI::App* sub = root.add_subcommand("decode", "Decode prompts with optional dynamic correction");
  cmd->model.add(*sub);
  cmd->decode.add(*sub);
  cmd->prompts.add(*sub, 1);
  sub->callback([cmd, &ctx] { ctx.action = [cmd, &ctx] { run_decode(*cmd, ctx); }; });
}

}  // namespace deco::cli
