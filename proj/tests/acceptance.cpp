// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "deco/analysis.hpp"
#include "deco/bench.hpp"
#include "deco/cli.hpp"
#include "deco/decoding.hpp"
#include "deco/eval.hpp"
#include "deco/json_io.hpp"
#include "deco/toy_model.hpp"
#include "deco/trace.hpp"
#include "support/fixtures.hpp"

using namespace deco;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path workdir() {
  fs::path d = fs::temp_directory_path() / "deco_acceptance";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TokenSequence toy_prompt(std::mt19937_64& g, const ToyModelConfig& c) {
  TokenSequence p;
  p.visual_prefix_len = 4;
  for (int i = 0; i < 4; ++i) p.ids.push_back(static_cast<TokenId>(g() % c.visual_vocab_size));
  for (int i = 0; i < 6; ++i) p.ids.push_back(static_cast<TokenId>(g() % c.vocab_size));
  return p;
}

std::vector<fx::FlipFixture> flip_set(std::uint64_t seed, std::uint32_t lo, std::uint32_t hi) {
  std::mt19937_64 g(seed);
  std::vector<fx::FlipFixture> out;
  for (int i = 0; i < 50; ++i) out.push_back(fx::make_flip_fixture(g, 8, 32, lo, hi));
  return out;
}

// ---------------------------------------------------------------------------

Outcome identity_law() {
  ToyModel model{ToyModelConfig{}};
  std::mt19937_64 g(101);
  std::size_t mismatches = 0, runs = 0;
  for (int i = 0; i < 100; ++i) {
    TokenSequence p = toy_prompt(g, model.config());
    for (Strategy st : {Strategy::kGreedy, Strategy::kNucleus, Strategy::kBeam}) {
      DecodeConfig c;
      c.strategy = st;
      c.max_new_tokens = 8;
      c.beam_width = st == Strategy::kBeam ? 3 : 1;
      c.seed = static_cast<std::uint64_t>(i);
      DecoConfig zero;
      zero.alpha = 0.0;
      DecoConfig off;
      off.enabled = false;
      mismatches += decode(model, p, c, zero).tokens != decode(model, p, c, off).tokens ? 1 : 0;
      ++runs;
    }
  }
  return {mismatches == 0, std::to_string(runs - mismatches) + "/" + std::to_string(runs) + " identical"};
}

Outcome anchor_oracle() {
  std::mt19937_64 g(202);
  std::size_t agree = 0;
  const std::size_t total = 1000;
  for (std::size_t i = 0; i < total; ++i) {
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(g() % 15);
    const std::uint32_t v = 8 + static_cast<std::uint32_t>(g() % 120);
    LayerwiseStep s = fx::random_step(g, n, v, 0.5 + static_cast<double>(g() % 40) / 10.0);
    const std::uint32_t lo = 1 + static_cast<std::uint32_t>(g() % n);
    const std::uint32_t hi = lo + static_cast<std::uint32_t>(g() % (n - lo + 1));
    const double top_p = 0.5 + 0.49 * static_cast<double>(g() % 100) / 100.0;
    auto got = select_anchor(s, acquire_candidates(s, top_p), lo, hi);
    auto want = fx::ref_anchor(s, lo, hi, top_p);
    agree += got.anchor_layer == want.layer && got.winning_token == want.token ? 1 : 0;
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " match"};
}

Outcome flip_fixture() {
  std::size_t ok = 0;
  auto fixtures = flip_set(303, 5, 7);
  for (const auto& f : fixtures) {
    auto model = TraceReplayModel::from_steps({f.step});
    TokenSequence p{{0}, 0};
    DecodeConfig c;
    c.max_new_tokens = 1;
    DecoConfig on;
    on.alpha = 0.6;
    on.layer_lo = 5;
    on.layer_hi = 7;
    DecoConfig zero = on;
    zero.alpha = 0.0;
    bool good = decode(model, p, c, on).tokens == std::vector<TokenId>{f.truth} &&
                decode(model, p, c, zero).tokens == std::vector<TokenId>{f.hallucinated};
    ok += good ? 1 : 0;
  }
  return {ok == fixtures.size(), std::to_string(ok) + "/" + std::to_string(fixtures.size()) + " flip correctly"};
}

Outcome hit_rate_oracle() {
  std::mt19937_64 g(404);
  const std::uint32_t n = 8, v = 64;
  std::vector<LayerwiseStep> steps;
  std::vector<std::vector<TokenId>> truth;
  std::vector<std::uint32_t> planted;
  for (int i = 0; i < 500; ++i) {
    auto p = fx::make_planted_step(g, n, v);
    // half the traces carry the planted token into the final-layer nucleus
    if (i % 2 == 0) p.step.early_logits[static_cast<std::size_t>(n - 1) * v + p.truth] = 6.0f;
    steps.push_back(p.step);
    truth.push_back({p.truth});
    planted.push_back(p.planted_layer);
  }
  std::size_t mismatches = 0;
  bool monotone = true;
  std::ostringstream detail;
  for (auto [a, b] : std::vector<std::pair<std::uint32_t, std::uint32_t>>{{3, 5}, {4, 6}, {5, 7}, {2, 4}}) {
    for (auto [lo, hi] : std::vector<std::pair<std::uint32_t, std::uint32_t>>{{a, b}, {a - 1, b + 1}}) {
      auto r = hit_rate(steps, truth, lo, hi);
      for (std::size_t i = 0; i < steps.size(); ++i) {
        auto ref = fx::ref_anchor(steps[i], lo, hi, 0.9);
        bool want = ref.token == truth[i][0];
        if (r.decisions[i] != want || r.picked[i] != ref.token) ++mismatches;
      }
    }
    auto scanned = [&](std::uint32_t lo, std::uint32_t hi) {
      return std::count_if(planted.begin(), planted.end(), [&](std::uint32_t l) { return l >= lo && l <= hi; });
    };
    auto narrow = scanned(a, b), wide = scanned(a - 1, b + 1);
    monotone = monotone && wide >= narrow;
    detail << "[" << a << "," << b << "] scanned " << narrow << " -> " << wide << "; ";
  }
  detail << mismatches << " oracle mismatches";
  return {mismatches == 0 && monotone, detail.str()};
}

Outcome metric_exactness() {
  std::mt19937_64 g(505);
  std::vector<std::string> universe;
  for (int i = 0; i < 10; ++i) universe.push_back("obj" + std::to_string(i));
  ObjectVocabulary vocab(universe, {});
  auto pick = [&](double p) {
    std::set<std::string> s;
    for (const auto& u : universe)
      if (std::bernoulli_distribution(p)(g)) s.insert(u);
    return s;
  };
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<fx::CaptionFixture> fs;
    std::vector<CaptionRecord> rs;
    const std::size_t count = 1 + g() % 20;
    for (std::size_t i = 0; i < count; ++i) {
      fx::CaptionFixture f{"img" + std::to_string(i), pick(0.35), pick(0.35), pick(0.3), g() % 5 != 0};
      std::optional<std::vector<std::string>> pot;
      if (f.has_potential) pot = std::vector<std::string>(f.potential.begin(), f.potential.end());
      rs.push_back(make_caption_record(f.id, {f.mentioned.begin(), f.mentioned.end()}, {f.truth.begin(), f.truth.end()},
                                       pot, vocab));
      fs.push_back(f);
    }
    auto co = fx::chair_oracle(fs);
    auto c = chair_score(rs);
    track(c.chair_i, co.chair_i.value());
    track(c.chair_s, co.chair_s.value());
    auto ao = fx::amber_oracle(fs);
    auto a = amber_score(rs);
    track(a.chair, ao.chair.value());
    track(a.cover, ao.cover.value());
    track(a.hal, ao.hal.value());
    track(a.cog, ao.cog.value());

    std::vector<PopeItem> items;
    fx::PopeOracle po;
    for (std::size_t i = 0; i < count; ++i) {
      bool gold = g() % 2, ans = g() % 2;
      items.push_back({"img", "obj", gold, PopeSplit::kPopular, ans});
      (gold ? (ans ? po.tp : po.fn) : (ans ? po.fp : po.tn)) += 1;
    }
    auto ps = pope_f1(items).at("all");
    track(ps.precision, po.precision().value());
    track(ps.recall, po.recall().value());
    track(ps.f1, po.f1());
    track(ps.accuracy, po.accuracy().value());
  }
  std::ostringstream d;
  d << "max deviation " << worst << " over 500 randomized fixtures";
  return {worst <= 1e-12, d.str()};
}

ProbeDataset clusters(std::mt19937_64& g, std::size_t per_class, std::size_t dim, Split split) {
  std::normal_distribution<double> nd(0, 1);
  ProbeDataset data;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    bool pos = i % 2 == 0;
    ProbeExample e;
    e.exists = pos;
    e.split = split;
    for (std::size_t k = 0; k < dim; ++k) e.features.push_back(nd(g) + (k == 0 ? (pos ? 4.0 : -4.0) : 0.0));
    data.examples.push_back(e);
  }
  return data;
}

Outcome probe_correctness() {
  std::mt19937_64 g(606);
  std::normal_distribution<double> nd(0, 1);
  double worst_rel = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t dim = 1 + g() % 16;
    ProbeDataset data;
    for (std::size_t i = 0; i < 10 + g() % 30; ++i) {
      ProbeExample e;
      for (std::size_t k = 0; k < dim; ++k) e.features.push_back(nd(g));
      e.exists = g() % 2;
      data.examples.push_back(e);
    }
    std::vector<double> w(dim);
    for (auto& x : w) x = nd(g);
    const double b = nd(g), l2 = 0.05 * static_cast<double>(inst % 3);
    LossGrad lg = logistic_loss(data, w, b, l2);
    const double h = 1e-5;
    auto rel = [](double fd, double an) { return std::abs(fd - an) / std::max(1e-3, std::abs(fd)); };
    for (std::size_t k = 0; k <= dim; ++k) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (k < dim) {
        wp[k] += h;
        wm[k] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (logistic_loss(data, wp, bp, l2).loss - logistic_loss(data, wm, bm, l2).loss) / (2 * h);
      worst_rel = std::max(worst_rel, rel(fd, k < dim ? lg.grad_weights[k] : lg.grad_bias));
    }
  }

  ProbeDataset sep = clusters(g, 200, 8, Split::kTrain);
  ProbeDataset held = clusters(g, 500, 8, Split::kInDist);
  sep.examples.insert(sep.examples.end(), held.examples.begin(), held.examples.end());
  ProbeModel m = probe_train(sep, ProbeParams{});
  const double sep_train = probe_accuracy(m, sep, Split::kTrain).all.value;
  const double sep_held = probe_accuracy(m, sep, Split::kInDist).all.value;

  // label-shuffled: same features, balanced labels permuted at random
  ProbeDataset shuffled = clusters(g, 1000, 8, Split::kTrain);
  ProbeDataset shuffled_held = clusters(g, 2500, 8, Split::kInDist);
  shuffled.examples.insert(shuffled.examples.end(), shuffled_held.examples.begin(), shuffled_held.examples.end());
  std::vector<bool> labels;
  for (const auto& e : shuffled.examples) labels.push_back(e.exists);
  std::shuffle(labels.begin(), labels.end(), g);
  std::size_t pos_train = 0, n_train = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    shuffled.examples[i].exists = labels[i];
    if (shuffled.examples[i].split == Split::kTrain) {
      ++n_train;
      pos_train += labels[i] ? 1 : 0;
    }
  }
  // keep the train split inside the balance band probe_train requires
  for (std::size_t i = 0; i < shuffled.examples.size() && 2 * pos_train != n_train; ++i) {
    auto& e = shuffled.examples[i];
    if (e.split != Split::kTrain) continue;
    if (2 * pos_train > n_train && e.exists) {
      e.exists = false;
      --pos_train;
    } else if (2 * pos_train < n_train && !e.exists) {
      e.exists = true;
      ++pos_train;
    }
  }
  ProbeModel noise = probe_train(shuffled, ProbeParams{});
  const double shuffled_held_acc = probe_accuracy(noise, shuffled, Split::kInDist).all.value;

  std::ostringstream d;
  d << "grad max rel err " << worst_rel << "; separable train " << sep_train << " held-out " << sep_held
    << "; shuffled held-out " << shuffled_held_acc;
  bool pass = worst_rel <= 1e-5 && sep_train >= 0.99 && sep_held >= 0.99 && std::abs(shuffled_held_acc - 0.5) <= 0.05;
  return {pass, d.str()};
}

Outcome trace_fidelity() {
  ToyModel model{ToyModelConfig{}};
  std::mt19937_64 g(707);
  TokenSequence p = toy_prompt(g, model.config());
  DecodeConfig c;
  c.max_new_tokens = 24;
  std::vector<LayerwiseStep> steps;
  DecodeOptions o;
  o.full_readout = true;
  o.want_hidden = true;
  o.observer = [&](const LayerwiseStep& s) { steps.push_back(s); };
  auto live = decode(model, p, c, DecoConfig{}, o);

  fs::path a = workdir() / "fidelity_a.lwt", b = workdir() / "fidelity_b.lwt";
  write_trace(a, steps);
  auto back = read_trace(a);
  write_trace(b, back);
  const bool steps_equal = back == steps;
  const bool bytes_equal = slurp(a) == slurp(b) && !slurp(a).empty();

  auto replay = decode(TraceReplayModel::open(a), p, c, DecoConfig{});
  const bool tokens_equal = replay.tokens == live.tokens;
  std::ostringstream d;
  d << steps.size() << " steps, " << fs::file_size(a) << " bytes; bytes " << (bytes_equal ? "identical" : "DIFFER")
    << ", steps " << (steps_equal ? "identical" : "DIFFER") << ", replay tokens "
    << (tokens_equal ? "identical" : "DIFFER");
  return {steps_equal && bytes_equal && tokens_equal, d.str()};
}

Outcome latency_bound() {
  ToyModelConfig cfg;
  cfg.num_layers = 8;
  cfg.vocab_size = 256;
  ToyModel model{cfg};
  std::mt19937_64 g(808);
  std::vector<TokenSequence> prompts;
  for (int i = 0; i < 10; ++i) prompts.push_back(toy_prompt(g, cfg));
  DecodeConfig c;
  c.max_new_tokens = 128;
  DecoConfig off;
  off.enabled = false;
  BenchConfig bc;
  bc.runs = 20;
  auto r = bench(model, prompts, c, off, DecoConfig{}, bc);
  std::ostringstream d;
  d << "per-token median off " << r.baseline.latency_per_token_s * 1e6 << " us, on "
    << r.candidate.latency_per_token_s * 1e6 << " us, ratio " << r.ratio;
  return {r.ratio > 0.0 && r.ratio <= 1.5, d.str()};
}

Outcome perturbation() {
  auto fixtures = flip_set(909, 3, 6);
  std::vector<LayerwiseStep> steps;
  std::vector<std::vector<TokenId>> truth;
  for (const auto& f : fixtures) {
    steps.push_back(f.step);
    truth.push_back({f.truth});
  }
  auto r = perturbation_trials(steps, truth, 3, 6, 0.9, 5, 500, 99);
  std::ostringstream d;
  d << "base " << r.base_rate << "; not higher " << r.trials_not_higher << "/500, strictly lower "
    << r.trials_strictly_lower << "/500";
  return {r.trial_rates.size() == 500 && r.trials_not_higher == 500 && r.trials_strictly_lower >= 450, d.str()};
}

nlohmann::ordered_json without_timing(nlohmann::ordered_json j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [k, v] : j.items()) v = without_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = without_timing(v);
  }
  return j;
}

Outcome determinism() {
  fs::path d = workdir();
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(d / name) << content;
    return (d / name).string();
  };
  const std::string prompts = write("prompts.jsonl",
                                    "{\"prompt_tokens\":[1,2,3,4,50,60,70],\"visual_prefix_len\":4}\n"
                                    "{\"prompt_tokens\":[5,6,7,8,9,10,11],\"visual_prefix_len\":4}\n");
  std::string trace = (d / "det.lwt").string();
  std::string nv_trace = (d / "det_nv.lwt").string();
  {
    std::ostringstream o, e;
    run_cli({"--seed", "5", "trace", "record", "--prompts", prompts, "--max-new-tokens", "6", "--trace", trace}, o, e);
    run_cli({"--seed", "5", "trace", "record", "--prompts", prompts, "--max-new-tokens", "6", "--trace", nv_trace,
             "--hidden"},
            o, e);
  }
  std::string labels;
  for (int i = 0; i < 12; ++i)
    labels += "{\"step_index\":" + std::to_string(i) + ",\"ground_truth_tokens\":[" + std::to_string(3 * i + 1) +
              "],\"exists\":" + (i % 2 ? "true" : "false") + ",\"split\":\"" + (i < 8 ? "train" : "in_dist") +
              "\"}\n";
  const std::string label_path = write("labels.jsonl", labels);
  const std::string caps = write("caps.jsonl",
                                 "{\"image_id\":\"a\",\"raw_caption\":\"A dog near two cats.\",\"ground_truth\":[\"dog\"],"
                                 "\"potential_hallucinations\":[\"cat\"]}\n"
                                 "{\"image_id\":\"b\",\"mentioned\":[\"car\"],\"ground_truth\":[\"car\",\"tree\"]}\n");
  const std::string uni = write("universe.json", R"(["dog","cat","car","tree"])");
  const std::string ann = write("ann.jsonl",
                                "{\"image_id\":\"a\",\"ground_truth\":[\"dog\",\"cat\"]}\n"
                                "{\"image_id\":\"b\",\"ground_truth\":[\"car\",\"tree\"]}\n"
                                "{\"image_id\":\"c\",\"ground_truth\":[\"dog\",\"tree\"]}\n");

  std::vector<std::vector<std::string>> commands{
      {"--seed", "5", "decode", "--prompts", prompts, "--max-new-tokens", "10"},
      {"--seed", "5", "decode", "--synthetic", "4", "--strategy", "nucleus", "--max-new-tokens", "10"},
      {"--seed", "5", "decode", "--synthetic", "2", "--strategy", "beam", "--beam-width", "3"},
      {"trace", "inspect", trace},
      {"analyze", "activation", "--trace", trace, "--labels", label_path},
      {"analyze", "hitrate", "--trace", trace, "--labels", label_path, "--interval", "3:5", "--interval", "2:6"},
      {"analyze", "perturb", "--trace", trace, "--labels", label_path, "--trials", "50"},
      {"analyze", "probe-train", "--trace", nv_trace, "--labels", label_path, "--layers", "2,4", "--epochs", "50"},
      {"eval", "chair", "--captions", caps, "--objects", uni},
      {"eval", "amber", "--captions", caps, "--objects", uni},
      {"eval", "pope-gen", "--annotations", ann, "--split", "popular", "--k", "2"},
      {"model", "forward", "--prompt", "1,2,3"},
  };
  std::size_t same = 0, failed = 0;
  std::string first_bad;
  for (const auto& cmd : commands) {
    std::ostringstream o1, e1, o2, e2;
    const int c1 = run_cli(cmd, o1, e1), c2 = run_cli(cmd, o2, e2);
    if (c1 != 0 || c2 != 0) {
      ++failed;
      if (first_bad.empty()) first_bad = cmd[cmd[0] == "--seed" ? 2 : 0] + " exit " + std::to_string(c1) + ": " + e1.str();
      continue;
    }
    std::string a = o1.str(), b = o2.str();
    // JSON reports compare with "timing" removed; JSON-lines output compares raw
    if (nlohmann::ordered_json::accept(a) && nlohmann::ordered_json::accept(b)) {
      a = without_timing(nlohmann::ordered_json::parse(a)).dump();
      b = without_timing(nlohmann::ordered_json::parse(b)).dump();
    }
    if (a == b) ++same;
    else if (first_bad.empty()) first_bad = cmd[0];
  }
  std::string detail = std::to_string(same) + "/" + std::to_string(commands.size()) + " commands byte-identical";
  if (!first_bad.empty()) detail += "; first problem: " + first_bad;
  return {same == commands.size() && failed == 0, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"1 identity law (alpha=0 == off)", identity_law},
      {"2 anchor oracle", anchor_oracle},
      {"3 flip fixture", flip_fixture},
      {"4 hit-rate oracle and widening", hit_rate_oracle},
      {"5 metric exactness", metric_exactness},
      {"6 probe correctness", probe_correctness},
      {"7 trace fidelity", trace_fidelity},
      {"8 latency bound", latency_bound},
      {"9 perturbation degradation", perturbation},
      {"10 CLI determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " -- " << o.detail << " (" << secs << " s)\n";
    failures += o.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
