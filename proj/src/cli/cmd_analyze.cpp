// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <sstream>

#include "cli_internal.hpp"
#include "deco/analysis.hpp"

namespace deco::cli {
namespace {

struct TraceInputs {
  std::string trace;
  std::string labels;

  void add(CLI::App& app) {
    app.add_option("--trace", trace, "LWT1 trace file")->required();
    app.add_option("--labels", labels, "JSON-lines labels sidecar")->required();
  }
};

struct IntervalFlags {
  Flag<std::uint32_t> layer_lo, layer_hi;
  Flag<double> top_p;

  void add(CLI::App& app) {
    layer_lo.opt = app.add_option("--layer-lo", layer_lo.value, "First layer of the search interval (1-based)");
    layer_hi.opt = app.add_option("--layer-hi", layer_hi.value, "Last layer of the search interval (1-based)");
    top_p.opt = app.add_option("--top-p", top_p.value, "Final-layer candidate mass");
  }

  DecoConfig resolve_for(const RunConfig& c, std::uint32_t num_layers) const {
    DecoConfig d = c.deco;
    layer_lo.apply(d.layer_lo);
    layer_hi.apply(d.layer_hi);
    top_p.apply(d.top_p);
    return usage_check([&] {
      if (!(d.top_p > 0 && d.top_p <= 1)) throw InvalidInput("--top-p must be in (0, 1]");
      return resolve(d, num_layers);
    });
  }
};

/// Labeled steps that carry at least one ground-truth token.
struct GroundTruthSet {
  std::vector<LayerwiseStep> steps;
  std::vector<std::vector<TokenId>> truth;
  std::vector<std::uint32_t> indices;
  std::size_t skipped = 0;
};

GroundTruthSet ground_truth_steps(const LabeledTrace& lt) {
  GroundTruthSet g;
  for (const auto& l : lt.labels) {
    if (l.ground_truth_tokens.empty()) {
      ++g.skipped;
      continue;
    }
    g.steps.push_back(lt.steps[l.step_index]);
    g.truth.push_back(l.ground_truth_tokens);
    g.indices.push_back(l.step_index);
  }
  if (g.steps.empty()) throw DegenerateData("no labeled step carries ground-truth tokens");
  return g;
}

Json inputs_json(const TraceInputs& in, const LabeledTrace& lt) {
  return Json{{"trace", in.trace},
              {"labels", in.labels},
              {"num_layers", lt.header.num_layers},
              {"vocab_size", lt.header.vocab_size},
              {"num_steps", lt.header.num_steps},
              {"labeled_steps", lt.labels.size()}};
}

Json histogram_json(const std::map<std::uint32_t, std::size_t>& h) {
  Json j = Json::object();
  for (auto [k, v] : h) j[std::to_string(k)] = v;
  return j;
}

// ---- activation ----------------------------------------------------------------

struct ActivationCommand {
  TraceInputs in;
  Flag<double> top_p;
  double threshold = 0.1;
};

void run_activation(const ActivationCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  if (!(cmd.threshold > 0 && cmd.threshold < 1))
    throw UsageError("--threshold must lie strictly between 0 and 1, got " + Json(cmd.threshold).dump());
  double top_p = c.deco.top_p;
  cmd.top_p.apply(top_p);
  if (!(top_p > 0 && top_p <= 1)) throw UsageError("--top-p must be in (0, 1]");

  LabeledTrace lt = load_labeled_trace(cmd.in.trace, cmd.in.labels);
  GroundTruthSet g = ground_truth_steps(lt);
  std::vector<std::optional<Activation>> found(g.steps.size());
  parallel_for(g.steps.size(), [&](std::size_t i) {
    auto q = make_activation_query(g.steps[i], g.truth[i], cmd.threshold, top_p);
    found[i] = detect_activation(g.steps[i], q);
  });

  std::map<std::uint32_t, std::size_t> first, all;
  Json steps = Json::array();
  std::size_t activated = 0;
  for (std::size_t i = 0; i < found.size(); ++i) {
    Json s{{"step_index", g.indices[i]}, {"activated", found[i].has_value()}};
    if (found[i]) {
      ++activated;
      ++first[found[i]->layer];
      for (auto l : found[i]->activated_layers) ++all[l];
      s["token"] = found[i]->token;
      s["layer"] = found[i]->layer;
      s["max_gap"] = found[i]->max_gap;
      s["activated_layers"] = found[i]->activated_layers;
    }
    steps.push_back(s);
  }
  Json report = report_header("analyze activation");
  report["inputs"] = inputs_json(cmd.in, lt);
  report["params"] = Json{{"threshold", cmd.threshold}, {"top_p", top_p}};
  report["total"] = found.size();
  report["activated"] = activated;
  report["skipped_without_ground_truth"] = g.skipped;
  report["first_layer_histogram"] = histogram_json(first);
  report["all_layer_histogram"] = histogram_json(all);
  report["steps"] = steps;
  ctx.emit(report);
}

// ---- hit rate -------------------------------------------------------------------

struct HitRateCommand {
  TraceInputs in;
  IntervalFlags interval;
  std::vector<std::string> sweep;
};

std::pair<std::uint32_t, std::uint32_t> parse_interval(const std::string& s) {
  std::istringstream is(s);
  std::uint32_t a = 0, b = 0;
  char colon = 0;
  if (!(is >> a >> colon >> b) || colon != ':' || !is.eof())
    throw UsageError("interval '" + s + "' is not of the form LO:HI");
  return {a, b};
}

void run_hitrate(const HitRateCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  LabeledTrace lt = load_labeled_trace(cmd.in.trace, cmd.in.labels);
  DecoConfig d = cmd.interval.resolve_for(c, lt.header.num_layers);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> intervals;
  if (cmd.sweep.empty()) {
    intervals.emplace_back(d.layer_lo, d.layer_hi);
  } else {
    for (const auto& s : cmd.sweep) {
      auto iv = parse_interval(s);
      DecoConfig e = d;
      e.layer_lo = iv.first;
      e.layer_hi = iv.second;
      usage_check([&] { resolve(e, lt.header.num_layers); });
      intervals.push_back(iv);
    }
  }
  GroundTruthSet g = ground_truth_steps(lt);
  Json reports = Json::array();
  for (auto [lo, hi] : intervals) {
    HitRateReport r = hit_rate(g.steps, g.truth, lo, hi, d.top_p);
    Json j = to_json(r);
    j["step_indices"] = g.indices;
    reports.push_back(j);
  }
  Json report = report_header("analyze hitrate");
  report["inputs"] = inputs_json(cmd.in, lt);
  report["params"] = Json{{"top_p", d.top_p}};
  report["skipped_without_ground_truth"] = g.skipped;
  report["intervals"] = reports;
  ctx.emit(report);
}

// ---- overlap ------------------------------------------------------------------

struct OverlapCommand {
  TraceInputs in;
  std::string no_visual_trace;
  Flag<double> top_p;
};

void run_overlap(const OverlapCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  double top_p = c.deco.top_p;
  cmd.top_p.apply(top_p);
  if (!(top_p > 0 && top_p <= 1)) throw UsageError("--top-p must be in (0, 1]");
  LabeledTrace lt = load_labeled_trace(cmd.in.trace, cmd.in.labels);
  std::vector<LayerwiseStep> other;
  if (!cmd.no_visual_trace.empty()) {
    other = read_trace(cmd.no_visual_trace);
    if (!other.empty() && (other.front().num_layers != lt.header.num_layers ||
                           other.front().vocab_size != lt.header.vocab_size))
      throw FormatError(cmd.no_visual_trace + ": shape differs from " + cmd.in.trace);
  }
  const auto& pool = cmd.no_visual_trace.empty() ? lt.steps : other;
  std::vector<LayerwiseStep> with, without;
  for (const auto& l : lt.labels) {
    if (!l.paired_no_visual_step) continue;
    if (*l.paired_no_visual_step >= pool.size())
      throw FormatError(cmd.in.labels + ": paired_no_visual_step " + std::to_string(*l.paired_no_visual_step) +
                        " outside the paired trace's " + std::to_string(pool.size()) + " steps");
    with.push_back(lt.steps[l.step_index]);
    without.push_back(pool[*l.paired_no_visual_step]);
  }
  if (with.empty()) throw DegenerateData("no labeled step has a paired_no_visual_step");
  OverlapReport r = overlap_rate(with, without, top_p);
  Json report = report_header("analyze overlap");
  report["inputs"] = inputs_json(cmd.in, lt);
  if (!cmd.no_visual_trace.empty()) report["inputs"]["no_visual_trace"] = cmd.no_visual_trace;
  report["params"] = Json{{"top_p", top_p}};
  merge(report, to_json(r));
  ctx.emit(report);
}

// ---- perturbation -----------------------------------------------------------------

struct PerturbCommand {
  TraceInputs in;
  IntervalFlags interval;
  std::uint32_t magnitude = 5;
  std::uint32_t trials = 500;
};

void run_perturb(const PerturbCommand& cmd, Context& ctx) {
  RunConfig c = ctx.base_config();
  if (cmd.trials == 0) throw UsageError("--trials must be positive");
  LabeledTrace lt = load_labeled_trace(cmd.in.trace, cmd.in.labels);
  DecoConfig d = cmd.interval.resolve_for(c, lt.header.num_layers);
  GroundTruthSet g = ground_truth_steps(lt);
  PerturbationReport r =
      perturbation_trials(g.steps, g.truth, d.layer_lo, d.layer_hi, d.top_p, cmd.magnitude, cmd.trials, c.decode.seed);
  Json report = report_header("analyze perturb");
  report["inputs"] = inputs_json(cmd.in, lt);
  report["params"] = Json{{"layer_lo", d.layer_lo}, {"layer_hi", d.layer_hi}, {"top_p", d.top_p},
                          {"magnitude", cmd.magnitude}, {"trials", cmd.trials}, {"seed", c.decode.seed}};
  merge(report, to_json(r));
  ctx.emit(report);
}

// ---- probes ------------------------------------------------------------------------

std::vector<std::uint32_t> parse_layers(const std::string& spec, std::uint32_t num_layers) {
  std::vector<std::uint32_t> out;
  if (spec == "all") {
    for (std::uint32_t l = 1; l <= num_layers; ++l) out.push_back(l);
    return out;
  }
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::uint32_t l = 0;
    try {
      std::size_t used = 0;
      l = static_cast<std::uint32_t>(std::stoul(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--layers: '" + part + "' is not a layer number");
    }
    if (l < 1 || l > num_layers)
      throw UsageError("--layers: layer " + std::to_string(l) + " outside 1.." + std::to_string(num_layers));
    out.push_back(l);
  }
  if (out.empty()) throw UsageError("--layers is empty");
  return out;
}

ProbeDataset probe_dataset(const LabeledTrace& lt, std::uint32_t layer, const std::string& labels) {
  if (!lt.header.has_hidden()) throw FormatError("trace has no hidden states (record it with --hidden)");
  ProbeDataset data;
  for (std::size_t k = 0; k < lt.labels.size(); ++k) {
    const StepLabel& l = lt.labels[k];
    if (!l.exists) throw FormatError(labels + ": record " + std::to_string(k + 1) + ": probe labels need 'exists'");
    auto h = lt.steps[l.step_index].layer_hidden(layer);
    data.examples.push_back(ProbeExample{std::vector<double>(h.begin(), h.end()), *l.exists, l.split.value_or(Split::kTrain)});
  }
  return data;
}

Json split_accuracies(const ProbeModel& m, const ProbeDataset& data) {
  Json j = Json::object();
  for (Split s : {Split::kTrain, Split::kInDist, Split::kOod})
    if (data.count(s) > 0) j[split_name(s)] = to_json(probe_accuracy(m, data, s));
  return j;
}

struct ProbeTrainCommand {
  TraceInputs in;
  std::string layers = "all";
  ProbeParams params;
};

void run_probe_train(const ProbeTrainCommand& cmd, Context& ctx) {
  ctx.base_config();
  if (!(cmd.params.learning_rate > 0) || cmd.params.epochs == 0 || cmd.params.l2 < 0)
    throw UsageError("--lr and --epochs must be positive and --l2 non-negative");
  LabeledTrace lt = load_labeled_trace(cmd.in.trace, cmd.in.labels);
  auto layers = parse_layers(cmd.layers, lt.header.num_layers);
  std::vector<Json> per_layer(layers.size());
  parallel_for(layers.size(), [&](std::size_t i) {
    ProbeDataset data = probe_dataset(lt, layers[i], cmd.in.labels);
    ProbeModel m = probe_train(data, cmd.params, layers[i]);
    per_layer[i] = Json{{"layer", layers[i]}, {"accuracy", split_accuracies(m, data)}, {"probe", to_json(m)}};
  });
  Json report = report_header("analyze probe-train");
  report["inputs"] = inputs_json(cmd.in, lt);
  report["params"] = Json{{"learning_rate", cmd.params.learning_rate}, {"epochs", cmd.params.epochs}, {"l2", cmd.params.l2}};
  report["probes"] = per_layer;
  ctx.emit(report);
}

struct ProbeEvalCommand {
  TraceInputs in;
  std::string probes;
};

void run_probe_eval(const ProbeEvalCommand& cmd, Context& ctx) {
  ctx.base_config();
  Json doc = read_json_file(cmd.probes);
  if (!doc.is_object() || !doc.contains("probes") || !doc.at("probes").is_array())
    throw FormatError(cmd.probes + ": expected a probe-train report with a 'probes' array");
  LabeledTrace lt = load_labeled_trace(cmd.in.trace, cmd.in.labels);
  Json out = Json::array();
  for (const Json& entry : doc.at("probes")) {
    if (!entry.is_object() || !entry.contains("probe"))
      throw FormatError(cmd.probes + ": probe entry without a 'probe' object");
    ProbeModel m = probe_model_from_json(entry.at("probe"));
    if (m.layer < 1 || m.layer > lt.header.num_layers)
      throw FormatError(cmd.probes + ": probe layer " + std::to_string(m.layer) + " outside the trace");
    if (m.weights.size() != lt.header.hidden_dim)
      throw FormatError(cmd.probes + ": probe width " + std::to_string(m.weights.size()) + " differs from hidden_dim " +
                        std::to_string(lt.header.hidden_dim));
    ProbeDataset data = probe_dataset(lt, m.layer, cmd.in.labels);
    out.push_back(Json{{"layer", m.layer}, {"accuracy", split_accuracies(m, data)}});
  }
  Json report = report_header("analyze probe-eval");
  report["inputs"] = inputs_json(cmd.in, lt);
  report["inputs"]["probes"] = cmd.probes;
  report["layers"] = out;
  ctx.emit(report);
}

template <class Cmd, class Run>
void bind(CLI::App* sub, std::shared_ptr<Cmd> cmd, Context& ctx, Run run) {
  sub->callback([cmd, &ctx, run] { ctx.action = [cmd, &ctx, run] { run(*cmd, ctx); }; });
}

}  // namespace

void add_analyze(CLI::App& root, Context& ctx) {
  CLI::App* analyze = root.add_subcommand("analyze", "Layerwise mechanism analyses over recorded traces");
  analyze->require_subcommand(1);

  auto act = std::make_shared<ActivationCommand>();
  CLI::App* a = analyze->add_subcommand("activation", "Early-exit activation of ground-truth tokens");
  act->in.add(*a);
  a->add_option("--threshold", act->threshold, "Probability gap over the final argmax, in (0, 1)");
  act->top_p.opt = a->add_option("--top-p", act->top_p.value, "Final-layer candidate mass");
  bind(a, act, ctx, run_activation);

  auto hr = std::make_shared<HitRateCommand>();
  CLI::App* h = analyze->add_subcommand("hitrate", "Anchor hit rate over a layer interval");
  hr->in.add(*h);
  hr->interval.add(*h);
  h->add_option("--interval", hr->sweep, "LO:HI interval; repeat to compare several");
  bind(h, hr, ctx, run_hitrate);

  auto ov = std::make_shared<OverlapCommand>();
  CLI::App* o = analyze->add_subcommand("overlap", "Overlap of x_h with the no-visual candidate set");
  ov->in.add(*o);
  o->add_option("--no-visual-trace", ov->no_visual_trace, "Trace holding the paired no-visual steps");
  ov->top_p.opt = o->add_option("--top-p", ov->top_p.value, "Candidate mass");
  bind(o, ov, ctx, run_overlap);

  auto pt = std::make_shared<PerturbCommand>();
  CLI::App* p = analyze->add_subcommand("perturb", "Hit rate with randomly shifted anchor layers");
  pt->in.add(*p);
  pt->interval.add(*p);
  p->add_option("--magnitude", pt->magnitude, "Largest layer shift");
  p->add_option("--trials", pt->trials, "Number of perturbed trials");
  bind(p, pt, ctx, run_perturb);

  auto tr = std::make_shared<ProbeTrainCommand>();
  CLI::App* t = analyze->add_subcommand("probe-train", "Per-layer logistic probes on hidden states");
  tr->in.add(*t);
  t->add_option("--layers", tr->layers, "all, or a comma-separated list of layers");
  t->add_option("--lr", tr->params.learning_rate, "Learning rate");
  t->add_option("--epochs", tr->params.epochs, "Full-batch epochs");
  t->add_option("--l2", tr->params.l2, "L2 strength");
  bind(t, tr, ctx, run_probe_train);

  auto ev = std::make_shared<ProbeEvalCommand>();
  CLI::App* e = analyze->add_subcommand("probe-eval", "Evaluate trained probes per split");
  ev->in.add(*e);
  e->add_option("--probes", ev->probes, "Report written by probe-train")->required();
  bind(e, ev, ctx, run_probe_eval);
}

}  // namespace deco::cli
