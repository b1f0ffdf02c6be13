// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "deco/json_io.hpp"

namespace deco {
namespace {

std::string join_key(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

// Reads the fields of one JSON object and rejects anything it did not ask for.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_.empty() ? std::string("document") : where_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const Json& at(const std::string& key) { return j_.at(key); }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(key, "expected a finite number");
  }

  template <class U>
  void uint(const std::string& key, U& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "expected a non-negative integer");
    std::uint64_t x = v.get<std::uint64_t>();
    if (x > std::numeric_limits<U>::max()) fail(key, "value out of range");
    out = static_cast<U>(x);
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    out = v.get<std::string>();
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("'" + (key == where_ ? key : join_key(where_, key)) + "': " + what);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(item.key(), "unknown key");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

// Record-level reader for JSON-lines inputs; errors carry file and line.
struct LineContext {
  std::string file;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw FormatError(file + ":" + std::to_string(line) + ": '" + key + "': " + what);
  }

  const Json& require(const Json& rec, const std::string& key) const {
    if (!rec.contains(key)) fail(key, "missing");
    return rec.at(key);
  }

  TokenId token(const Json& v, const std::string& key) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "expected a non-negative integer");
    std::uint64_t x = v.get<std::uint64_t>();
    if (x > std::numeric_limits<std::uint32_t>::max()) fail(key, "value out of range");
    return static_cast<TokenId>(x);
  }

  std::vector<TokenId> tokens(const Json& v, const std::string& key) const {
    if (!v.is_array()) fail(key, "expected an array of token ids");
    std::vector<TokenId> out;
    for (const Json& e : v) out.push_back(token(e, key));
    return out;
  }

  std::vector<std::string> strings(const Json& v, const std::string& key) const {
    if (!v.is_array()) fail(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const Json& e : v) {
      if (!e.is_string()) fail(key, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::string id(const Json& v, const std::string& key) const {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    fail(key, "expected a string or integer");
  }

  bool yes_no(const Json& v, const std::string& key) const {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "yes") return true;
      if (s == "no") return false;
    }
    fail(key, "expected \"yes\" or \"no\"");
  }

  void only(const Json& rec, std::initializer_list<const char*> keys) const {
    for (const auto& item : rec.items()) {
      bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
      if (!known) fail(item.key(), "unknown key");
    }
  }
};


}  // namespace

void merge(Json& into, const Json& from) {
  for (const auto& item : from.items()) into[item.key()] = item.value();
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kGreedy: return "greedy";
    case Strategy::kNucleus: return "nucleus";
    case Strategy::kBeam: return "beam";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "greedy") return Strategy::kGreedy;
  if (name == "nucleus" || name == "sample") return Strategy::kNucleus;
  if (name == "beam") return Strategy::kBeam;
  throw InvalidInput("unknown strategy '" + name + "' (greedy, nucleus, beam)");
}

const char* modulation_name(Modulation m) { return m == Modulation::kMaxProb ? "max_prob" : "none"; }

Modulation parse_modulation(const std::string& name) {
  if (name == "max_prob") return Modulation::kMaxProb;
  if (name == "none") return Modulation::kNone;
  throw InvalidInput("unknown modulation '" + name + "' (max_prob, none)");
}

// ---- configs ---------------------------------------------------------------

Json to_json(const DecoConfig& c) {
  return Json{{"alpha", c.alpha},       {"layer_lo", c.layer_lo},
              {"layer_hi", c.layer_hi}, {"top_p", c.top_p},
              {"modulation", modulation_name(c.modulation)}, {"enabled", c.enabled}};
}

DecoConfig deco_config_from_json(const Json& j, DecoConfig c, const std::string& where) {
  Fields f(j, where);
  f.number("alpha", c.alpha);
  f.uint("layer_lo", c.layer_lo);
  f.uint("layer_hi", c.layer_hi);
  f.number("top_p", c.top_p);
  std::string mod = modulation_name(c.modulation);
  f.string("modulation", mod);
  try {
    c.modulation = parse_modulation(mod);
  } catch (const InvalidInput& e) {
    f.fail("modulation", e.what());
  }
  f.boolean("enabled", c.enabled);
  f.finish();
  if (c.alpha < 0) f.fail("alpha", "must be >= 0");
  if (!(c.top_p > 0 && c.top_p <= 1)) f.fail("top_p", "must be in (0, 1]");
  if ((c.layer_lo == 0) != (c.layer_hi == 0)) f.fail("layer_lo", "layer_lo and layer_hi must both be set or both be 0");
  if (c.layer_lo > c.layer_hi) f.fail("layer_lo", "must not exceed layer_hi");
  return c;
}

Json to_json(const DecodeConfig& c) {
  Json j{{"strategy", strategy_name(c.strategy)},
         {"max_new_tokens", c.max_new_tokens},
         {"sampling_top_p", c.sampling_top_p},
         {"beam_width", c.beam_width},
         {"repetition_penalty", c.repetition_penalty},
         {"seed", c.seed}};
  j["stop_token"] = c.stop_token ? Json(*c.stop_token) : Json(nullptr);
  return j;
}

DecodeConfig decode_config_from_json(const Json& j, DecodeConfig c, const std::string& where) {
  Fields f(j, where);
  std::string strategy = strategy_name(c.strategy);
  f.string("strategy", strategy);
  try {
    c.strategy = parse_strategy(strategy);
  } catch (const InvalidInput& e) {
    f.fail("strategy", e.what());
  }
  f.uint("max_new_tokens", c.max_new_tokens);
  f.number("sampling_top_p", c.sampling_top_p);
  f.uint("beam_width", c.beam_width);
  f.number("repetition_penalty", c.repetition_penalty);
  f.uint("seed", c.seed);
  if (f.has("stop_token")) {
    if (f.at("stop_token").is_null()) {
      c.stop_token.reset();
    } else {
      TokenId t = 0;
      f.uint("stop_token", t);
      c.stop_token = t;
    }
  }
  f.finish();
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("'" + where + "': " + e.what());
  }
  return c;
}

Json to_json(const ToyModelConfig& c) {
  return Json{{"num_layers", c.num_layers}, {"hidden_dim", c.hidden_dim},   {"vocab_size", c.vocab_size},
              {"num_heads", c.num_heads},   {"max_seq_len", c.max_seq_len}, {"visual_vocab_size", c.visual_vocab_size},
              {"seed", c.seed}};
}

namespace {

void read_toy_fields(Fields& f, ToyModelConfig& c) {
  f.uint("num_layers", c.num_layers);
  f.uint("hidden_dim", c.hidden_dim);
  f.uint("vocab_size", c.vocab_size);
  f.uint("num_heads", c.num_heads);
  f.uint("max_seq_len", c.max_seq_len);
  f.uint("visual_vocab_size", c.visual_vocab_size);
  f.uint("seed", c.seed);
}

}  // namespace

ToyModelConfig toy_config_from_json(const Json& j, ToyModelConfig c, const std::string& where) {
  Fields f(j, where);
  read_toy_fields(f, c);
  f.finish();
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("'" + where + "': " + e.what());
  }
  return c;
}

Json to_json(const RunConfig& c) {
  Json model;
  switch (c.model.kind) {
    case ModelSource::Kind::kToy:
      model["source"] = "toy";
      merge(model, to_json(c.model.toy));
      break;
    case ModelSource::Kind::kTrace:
      model["source"] = "trace";
      model["path"] = c.model.path;
      break;
    case ModelSource::Kind::kWeights:
      model["source"] = "weights";
      model["path"] = c.model.path;
      break;
  }
  return Json{{"model", model},     {"decode", to_json(c.decode)}, {"deco", to_json(c.deco)},
              {"prompts", c.prompts}, {"out", c.out},              {"verbose", c.verbose}};
}

RunConfig run_config_from_json(const Json& j, RunConfig c) {
  Fields f(j, "");
  if (f.has("model")) {
    Fields m(f.at("model"), "model");
    std::string source = "toy";
    m.string("source", source);
    if (source == "toy") {
      c.model.kind = ModelSource::Kind::kToy;
      read_toy_fields(m, c.model.toy);
      c.model.path.clear();
      try {
        c.model.toy.validate();
      } catch (const InvalidInput& e) {
        throw ConfigError(std::string("'model': ") + e.what());
      }
    } else if (source == "trace" || source == "weights") {
      c.model.kind = source == "trace" ? ModelSource::Kind::kTrace : ModelSource::Kind::kWeights;
      if (!m.has("path")) m.fail("path", "required for source '" + source + "'");
      m.string("path", c.model.path);
      if (c.model.path.empty()) m.fail("path", "must not be empty");
    } else {
      m.fail("source", "expected \"toy\", \"trace\" or \"weights\"");
    }
    m.finish();
  }
  if (f.has("decode")) c.decode = decode_config_from_json(f.at("decode"), c.decode, "decode");
  if (f.has("deco")) c.deco = deco_config_from_json(f.at("deco"), c.deco, "deco");
  f.string("prompts", c.prompts);
  f.string("out", c.out);
  f.boolean("verbose", c.verbose);
  f.finish();
  return c;
}

Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

// ---- JSON-lines inputs -------------------------------------------------------

void for_each_json_line(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!rec.is_object()) throw FormatError(path.string() + ":" + std::to_string(n) + ": expected an object");
    try {
      fn(rec, n);
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::vector<TokenSequence> read_prompts(const std::filesystem::path& path) {
  std::vector<TokenSequence> out;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    LineContext ctx{path.string(), line};
    ctx.only(rec, {"prompt_tokens", "visual_prefix_len"});
    TokenSequence seq;
    seq.ids = ctx.tokens(ctx.require(rec, "prompt_tokens"), "prompt_tokens");
    if (rec.contains("visual_prefix_len")) seq.visual_prefix_len = ctx.token(rec.at("visual_prefix_len"), "visual_prefix_len");
    if (seq.visual_prefix_len > seq.ids.size()) ctx.fail("visual_prefix_len", "exceeds the prompt length");
    if (seq.ids.empty()) ctx.fail("prompt_tokens", "must not be empty");
    out.push_back(std::move(seq));
  });
  return out;
}

std::vector<StepLabel> read_labels(const std::filesystem::path& path) {
  std::vector<StepLabel> out;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    LineContext ctx{path.string(), line};
    ctx.only(rec, {"step_index", "ground_truth_tokens", "hallucinated_token", "paired_no_visual_step", "exists",
                   "split"});
    StepLabel l;
    l.step_index = ctx.token(ctx.require(rec, "step_index"), "step_index");
    if (rec.contains("ground_truth_tokens"))
      l.ground_truth_tokens = ctx.tokens(rec.at("ground_truth_tokens"), "ground_truth_tokens");
    if (rec.contains("hallucinated_token") && !rec.at("hallucinated_token").is_null())
      l.hallucinated_token = ctx.token(rec.at("hallucinated_token"), "hallucinated_token");
    if (rec.contains("paired_no_visual_step") && !rec.at("paired_no_visual_step").is_null())
      l.paired_no_visual_step = ctx.token(rec.at("paired_no_visual_step"), "paired_no_visual_step");
    if (rec.contains("exists") && !rec.at("exists").is_null()) {
      if (!rec.at("exists").is_boolean()) ctx.fail("exists", "expected true or false");
      l.exists = rec.at("exists").get<bool>();
    }
    if (rec.contains("split") && !rec.at("split").is_null()) {
      if (!rec.at("split").is_string()) ctx.fail("split", "expected a string");
      try {
        l.split = parse_split(rec.at("split").get<std::string>());
      } catch (const InvalidInput& e) {
        ctx.fail("split", e.what());
      }
    }
    out.push_back(std::move(l));
  });
  return out;
}

Json to_json(const StepLabel& l) {
  Json j{{"step_index", l.step_index}, {"ground_truth_tokens", l.ground_truth_tokens}};
  j["hallucinated_token"] = l.hallucinated_token ? Json(*l.hallucinated_token) : Json(nullptr);
  j["paired_no_visual_step"] = l.paired_no_visual_step ? Json(*l.paired_no_visual_step) : Json(nullptr);
  if (l.exists) j["exists"] = *l.exists;
  if (l.split) j["split"] = split_name(*l.split);
  return j;
}

std::vector<CaptionRecord> read_captions(const std::filesystem::path& path, const ObjectVocabulary& vocab) {
  std::vector<CaptionRecord> out;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    LineContext ctx{path.string(), line};
    ctx.only(rec, {"image_id", "mentioned", "raw_caption", "ground_truth", "potential_hallucinations"});
    std::string id = ctx.id(ctx.require(rec, "image_id"), "image_id");
    std::vector<std::string> mentioned;
    if (rec.contains("mentioned")) {
      mentioned = ctx.strings(rec.at("mentioned"), "mentioned");
    } else if (rec.contains("raw_caption")) {
      if (!rec.at("raw_caption").is_string()) ctx.fail("raw_caption", "expected a string");
      if (vocab.empty()) ctx.fail("raw_caption", "needs an object universe (--objects)");
      mentioned = vocab.extract(rec.at("raw_caption").get<std::string>());
    } else {
      ctx.fail("mentioned", "missing (give mentioned or raw_caption)");
    }
    auto truth = ctx.strings(ctx.require(rec, "ground_truth"), "ground_truth");
    std::optional<std::vector<std::string>> potential;
    if (rec.contains("potential_hallucinations") && !rec.at("potential_hallucinations").is_null())
      potential = ctx.strings(rec.at("potential_hallucinations"), "potential_hallucinations");
    out.push_back(make_caption_record(std::move(id), mentioned, truth, potential, vocab));
  });
  return out;
}

std::vector<PopeItem> read_pope_items(const std::filesystem::path& path) {
  std::vector<PopeItem> out;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    LineContext ctx{path.string(), line};
    ctx.only(rec, {"image_id", "object", "gold", "split", "answer", "question"});
    PopeItem item;
    item.image_id = ctx.id(ctx.require(rec, "image_id"), "image_id");
    const Json& obj = ctx.require(rec, "object");
    if (!obj.is_string()) ctx.fail("object", "expected a string");
    item.object = obj.get<std::string>();
    item.gold = ctx.yes_no(ctx.require(rec, "gold"), "gold");
    const Json& split = ctx.require(rec, "split");
    if (!split.is_string()) ctx.fail("split", "expected a string");
    try {
      item.split = parse_pope_split(split.get<std::string>());
    } catch (const InvalidInput& e) {
      ctx.fail("split", e.what());
    }
    if (rec.contains("answer") && !rec.at("answer").is_null()) item.answer = ctx.yes_no(rec.at("answer"), "answer");
    out.push_back(std::move(item));
  });
  return out;
}

std::vector<ImageObjects> read_image_objects(const std::filesystem::path& path, const ObjectVocabulary& vocab) {
  std::vector<ImageObjects> out;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    LineContext ctx{path.string(), line};
    ctx.only(rec, {"image_id", "ground_truth", "objects"});
    ImageObjects img;
    img.image_id = ctx.id(ctx.require(rec, "image_id"), "image_id");
    const char* key = rec.contains("objects") ? "objects" : "ground_truth";
    std::set<std::string> objs;
    for (const auto& o : ctx.strings(ctx.require(rec, key), key)) objs.insert(vocab.normalize(o));
    objs.erase("");
    img.objects.assign(objs.begin(), objs.end());
    out.push_back(std::move(img));
  });
  return out;
}

Json to_json(const PopeItem& item) {
  Json j{{"image_id", item.image_id},
         {"object", item.object},
         {"question", pope_question(item.object)},
         {"gold", item.gold ? "yes" : "no"},
         {"split", pope_split_name(item.split)}};
  if (item.answer) j["answer"] = *item.answer ? "yes" : "no";
  return j;
}

ObjectVocabulary read_vocabulary(const std::optional<std::filesystem::path>& universe,
                                 const std::optional<std::filesystem::path>& synonyms) {
  std::vector<std::string> objects;
  std::map<std::string, std::string> syn;
  if (universe) {
    Json j = read_json_file(*universe);
    if (j.is_object() && j.contains("objects")) j = j.at("objects");
    if (!j.is_array()) throw ConfigError(universe->string() + ": expected an array of object names");
    for (const Json& e : j) {
      if (!e.is_string()) throw ConfigError(universe->string() + ": expected an array of object names");
      objects.push_back(e.get<std::string>());
    }
  }
  if (synonyms) {
    Json j = read_json_file(*synonyms);
    if (!j.is_object()) throw ConfigError(synonyms->string() + ": expected an object of synonym -> canonical name");
    for (const auto& [k, v] : j.items()) {
      if (v.is_string()) {
        syn[k] = v.get<std::string>();
      } else if (v.is_array()) {
        // canonical -> [synonyms]
        for (const Json& e : v) {
          if (!e.is_string()) throw ConfigError(synonyms->string() + ": '" + k + "': expected strings");
          syn[e.get<std::string>()] = k;
        }
      } else {
        throw ConfigError(synonyms->string() + ": '" + k + "': expected a string or an array of strings");
      }
    }
  }
  return ObjectVocabulary(objects, syn);
}

// ---- reports -----------------------------------------------------------------

Json to_json(const AnchorSelection& s) {
  if (!s.valid()) return Json{{"anchor_layer", nullptr}};
  return Json{{"anchor_layer", s.anchor_layer},
              {"winning_token", s.winning_token},
              {"winning_prob", s.winning_prob},
              {"max_prob", s.max_prob}};
}

Json to_json(const DecodeResult& r, bool with_timing) {
  Json j{{"tokens", r.tokens}, {"chosen_probs", r.chosen_probs}};
  Json anchors = Json::array();
  for (const auto& a : r.anchors) anchors.push_back(to_json(a));
  j["anchors"] = anchors;
  if (with_timing) j["timing"] = Json{{"duration_s", std::chrono::duration<double>(r.duration).count()}};
  return j;
}

Json to_json(const HitRateReport& r) {
  return Json{{"layer_lo", r.layer_lo}, {"layer_hi", r.layer_hi}, {"hits", r.hits},
              {"total", r.total},       {"rate", r.rate},         {"picked", r.picked}};
}

Json to_json(const OverlapReport& r) {
  return Json{{"overlapping", r.overlapping}, {"total", r.total}, {"rate", r.rate}};
}

Json to_json(const PerturbationReport& r) {
  return Json{{"base_rate", r.base_rate},
              {"trials", r.trial_rates.size()},
              {"trials_not_higher", r.trials_not_higher},
              {"trials_strictly_lower", r.trials_strictly_lower},
              {"trial_rates", r.trial_rates}};
}

Json to_json(const ProbeModel& m) {
  return Json{{"layer", m.layer},
              {"epochs", m.epochs},
              {"learning_rate", m.learning_rate},
              {"l2", m.l2},
              {"final_loss", m.final_loss},
              {"bias", m.bias},
              {"weights", m.weights}};
}

ProbeModel probe_model_from_json(const Json& j) {
  Fields f(j, "probe");
  ProbeModel m;
  f.uint("layer", m.layer);
  f.uint("epochs", m.epochs);
  f.number("learning_rate", m.learning_rate);
  f.number("l2", m.l2);
  f.number("final_loss", m.final_loss);
  f.number("bias", m.bias);
  if (!f.has("weights")) f.fail("weights", "missing");
  const Json& w = f.at("weights");
  if (!w.is_array()) f.fail("weights", "expected an array of numbers");
  for (const Json& e : w) {
    if (!e.is_number()) f.fail("weights", "expected an array of numbers");
    m.weights.push_back(e.get<double>());
  }
  f.finish();
  return m;
}

namespace {

Json accuracy_json(const Accuracy& a) {
  Json j{{"correct", a.correct}, {"total", a.total}, {"accuracy", a.value}};
  if (!a.defined) j["undefined"] = true;
  return j;
}

}  // namespace

Json to_json(const AccuracyBreakdown& a) {
  return Json{{"all", accuracy_json(a.all)},
              {"existent", accuracy_json(a.existent)},
              {"non_existent", accuracy_json(a.non_existent)}};
}

Json to_json(const ChairReport& r) {
  return Json{{"chair_i", r.chair_i},
              {"chair_s", r.chair_s},
              {"hallucinated_objects", r.hallucinated_objects},
              {"mentioned_objects", r.mentioned_objects},
              {"captions_with_hallucination", r.captions_with_hallucination},
              {"captions", r.captions},
              {"chair_i_undefined", !r.chair_i_defined}};
}

Json to_json(const PopeScore& s) {
  return Json{{"tp", s.tp},
              {"fp", s.fp},
              {"tn", s.tn},
              {"fn", s.fn},
              {"precision", s.precision},
              {"recall", s.recall},
              {"f1", s.f1},
              {"accuracy", s.accuracy},
              {"yes_ratio", s.yes_ratio},
              {"precision_undefined", !s.precision_defined},
              {"recall_undefined", !s.recall_defined},
              {"f1_undefined", !s.f1_defined}};
}

Json to_json(const AmberReport& r) {
  return Json{{"chair", r.chair},
              {"cover", r.cover},
              {"cover_macro", r.cover_macro},
              {"hal", r.hal},
              {"cog", r.cog},
              {"cog_denominator", "hallucinated_mentions"},
              {"hallucinated_objects", r.hallucinated_objects},
              {"mentioned_objects", r.mentioned_objects},
              {"covered_objects", r.covered_objects},
              {"truth_objects", r.truth_objects},
              {"cog_hits", r.cog_hits},
              {"captions", r.captions},
              {"captions_with_hallucination", r.captions_with_hallucination},
              {"cover_excluded_records", r.cover_excluded_records},
              {"missing_potential_records", r.missing_potential_records},
              {"chair_undefined", !r.chair_defined},
              {"cover_undefined", !r.cover_defined},
              {"cog_undefined", !r.cog_defined}};
}

Json to_json(const BenchReport& r) {
  auto side = [](const BenchSide& s) {
    return Json{{"latency_per_token_s", s.latency_per_token_s},
                {"throughput_tok_s", s.throughput_tok_s},
                {"run_latencies_s", s.run_latencies_s}};
  };
  return Json{{"baseline", side(r.baseline)},
              {"candidate", side(r.candidate)},
              {"ratio", r.ratio},
              {"repeats_per_run", r.repeats_per_run},
              {"tokens_per_run", r.tokens_per_run}};
}

}  // namespace deco
