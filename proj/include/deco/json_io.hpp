// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deco/analysis.hpp"
#include "deco/bench.hpp"
#include "deco/deco.hpp"
#include "deco/error.hpp"
#include "deco/decoding.hpp"
#include "deco/eval.hpp"
#include "deco/toy_model.hpp"

namespace deco {

using Json = nlohmann::ordered_json;

/// A configuration document is malformed; the message names the offending key.
class ConfigError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Copies every member of object `from` into `into`, in order.
void merge(Json& into, const Json& from);

// ---- configs ---------------------------------------------------------------

Json to_json(const DecoConfig& c);
Json to_json(const DecodeConfig& c);
Json to_json(const ToyModelConfig& c);

/// Strict readers: unknown keys and wrong types raise ConfigError naming the
/// key (prefixed by `where`). Missing keys keep the value already in `base`.
DecoConfig deco_config_from_json(const Json& j, DecoConfig base = {}, const std::string& where = "deco");
DecodeConfig decode_config_from_json(const Json& j, DecodeConfig base = {}, const std::string& where = "decode");
ToyModelConfig toy_config_from_json(const Json& j, ToyModelConfig base = {}, const std::string& where = "model");

struct ModelSource {
  enum class Kind { kToy, kTrace, kWeights };
  Kind kind = Kind::kToy;
  ToyModelConfig toy;
  std::string path;

  friend bool operator==(const ModelSource&, const ModelSource&) = default;
};

struct RunConfig {
  ModelSource model;
  DecodeConfig decode;
  DecoConfig deco;
  std::string prompts;  // JSON-lines prompt file; empty means the built-in prompt
  std::string out;
  bool verbose = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

Json to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j, RunConfig base = {});

/// Parses a JSON document, raising ConfigError with the parser's position.
Json parse_json_text(const std::string& text, const std::string& what);
Json read_json_file(const std::filesystem::path& path);

// ---- JSON-lines inputs -------------------------------------------------------

/// Calls `fn(record, line_number)` for every non-blank line. Parse and schema
/// errors raise FormatError naming the file and line.
void for_each_json_line(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& fn);

std::vector<TokenSequence> read_prompts(const std::filesystem::path& path);

struct StepLabel {
  std::uint32_t step_index = 0;
  std::vector<TokenId> ground_truth_tokens;
  std::optional<TokenId> hallucinated_token;
  std::optional<std::uint32_t> paired_no_visual_step;
  std::optional<bool> exists;
  std::optional<Split> split;
};

std::vector<StepLabel> read_labels(const std::filesystem::path& path);
Json to_json(const StepLabel& l);

/// Captions; mentions come from "mentioned" or are extracted from
/// "raw_caption" with `vocab`.
std::vector<CaptionRecord> read_captions(const std::filesystem::path& path, const ObjectVocabulary& vocab);
std::vector<PopeItem> read_pope_items(const std::filesystem::path& path);
std::vector<ImageObjects> read_image_objects(const std::filesystem::path& path, const ObjectVocabulary& vocab);
Json to_json(const PopeItem& item);

ObjectVocabulary read_vocabulary(const std::optional<std::filesystem::path>& universe,
                                 const std::optional<std::filesystem::path>& synonyms);

// ---- reports -----------------------------------------------------------------

Json to_json(const AnchorSelection& s);
Json to_json(const DecodeResult& r, bool with_timing);
Json to_json(const HitRateReport& r);
Json to_json(const OverlapReport& r);
Json to_json(const PerturbationReport& r);
Json to_json(const ProbeModel& m);
ProbeModel probe_model_from_json(const Json& j);
Json to_json(const AccuracyBreakdown& a);
Json to_json(const ChairReport& r);
Json to_json(const PopeScore& s);
Json to_json(const AmberReport& r);
Json to_json(const BenchReport& r);

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);
const char* modulation_name(Modulation m);
Modulation parse_modulation(const std::string& name);

}  // namespace deco
