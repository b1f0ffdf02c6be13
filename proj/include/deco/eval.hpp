// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deco/objects.hpp"

namespace deco {

/// One generated caption with its annotations. Object lists are normalized,
/// sorted and deduplicated by make_caption_record.
struct CaptionRecord {
  std::string image_id;
  std::vector<std::string> mentioned;
  std::vector<std::string> ground_truth;
  std::optional<std::vector<std::string>> potential;
};

CaptionRecord make_caption_record(std::string image_id, const std::vector<std::string>& mentioned,
                                  const std::vector<std::string>& ground_truth,
                                  const std::optional<std::vector<std::string>>& potential,
                                  const ObjectVocabulary& vocab);

/// Mentions of `r` absent from its ground truth.
std::vector<std::string> hallucinated_objects(const CaptionRecord& r);

struct ChairReport {
  double chair_i = 0.0;
  double chair_s = 0.0;
  std::size_t hallucinated_objects = 0;
  std::size_t mentioned_objects = 0;
  std::size_t captions_with_hallucination = 0;
  std::size_t captions = 0;
  bool chair_i_defined = false;  // false when nothing was mentioned (chair_i reported as 0)
};

/// CHAIR_I = hallucinated / mentioned objects, CHAIR_S = captions with a
/// hallucination / captions. Throws InvalidInput on empty input.
ChairReport chair_score(const std::vector<CaptionRecord>& records);

// ---- POPE -----------------------------------------------------------------

enum class PopeSplit { kRandom, kPopular, kAdversarial };

const char* pope_split_name(PopeSplit s);
PopeSplit parse_pope_split(const std::string& name);

struct PopeItem {
  std::string image_id;
  std::string object;
  bool gold = false;
  PopeSplit split = PopeSplit::kRandom;
  std::optional<bool> answer;

  friend bool operator==(const PopeItem&, const PopeItem&) = default;
};

/// "Is there a <object> in the image?"
std::string pope_question(const std::string& object);

struct ImageObjects {
  std::string image_id;
  std::vector<std::string> objects;
};

struct PopeGeneration {
  std::vector<PopeItem> items;
  std::vector<std::string> warnings;
  std::size_t short_images = 0;  // images that got fewer than k/2 of either kind
};

/// k/2 positives sampled from each image's objects and k/2 negatives drawn
/// from the absent part of the frequency table's universe: uniformly
/// (random), by descending frequency (popular), or by descending summed
/// co-occurrence with the present objects (adversarial). `k` must be even.
PopeGeneration pope_generate(const std::vector<ImageObjects>& annotations,
                             const std::map<std::string, std::uint64_t>& frequency,
                             const std::map<std::string, std::map<std::string, std::uint64_t>>& cooccurrence,
                             PopeSplit split, std::uint32_t k, std::uint64_t seed);

struct PopeScore {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
  double yes_ratio = 0.0;
  bool precision_defined = false, recall_defined = false, f1_defined = false;
};

PopeScore pope_score_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

/// "yes" is the positive class. Keyed by split name plus "all". Throws
/// InvalidInput if any item lacks an answer.
std::map<std::string, PopeScore> pope_f1(const std::vector<PopeItem>& items);

// ---- AMBER-style ----------------------------------------------------------

struct AmberReport {
  double chair = 0.0;        // hallucinated / mentioned, micro
  double cover = 0.0;        // |mentioned & truth| / |truth|, micro over included records
  double cover_macro = 0.0;  // mean of per-record cover
  double hal = 0.0;          // captions with a hallucination / captions
  double cog = 0.0;          // |hallucinated & potential| / |hallucinated|, micro
  std::size_t hallucinated_objects = 0, mentioned_objects = 0;
  std::size_t covered_objects = 0, truth_objects = 0;
  std::size_t cog_hits = 0;
  std::size_t captions = 0, captions_with_hallucination = 0;
  std::size_t cover_excluded_records = 0;     // empty ground truth
  std::size_t missing_potential_records = 0;  // treated as an empty potential set
  bool chair_defined = false, cover_defined = false, cog_defined = false;
};

AmberReport amber_score(const std::vector<CaptionRecord>& records);

}  // namespace deco
