// SPDX-License-Identifier: Apache-2.0
#include "deco/eval.hpp"

#include <algorithm>
#include <set>

#include "deco/error.hpp"
#include "deco/rng.hpp"

namespace deco {

namespace {

std::vector<std::string> normalized_set(const std::vector<std::string>& names, const ObjectVocabulary& vocab) {
  std::set<std::string> out;
  for (const auto& n : names) {
    std::string v = vocab.normalize(n);
    if (!v.empty()) out.insert(std::move(v));
  }
  return {out.begin(), out.end()};
}

bool contains(const std::vector<std::string>& sorted, const std::string& s) {
  return std::binary_search(sorted.begin(), sorted.end(), s);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

CaptionRecord make_caption_record(std::string image_id, const std::vector<std::string>& mentioned,
                                  const std::vector<std::string>& ground_truth,
                                  const std::optional<std::vector<std::string>>& potential,
                                  const ObjectVocabulary& vocab) {
  CaptionRecord r;
  r.image_id = std::move(image_id);
  r.mentioned = normalized_set(mentioned, vocab);
  r.ground_truth = normalized_set(ground_truth, vocab);
  if (potential) r.potential = normalized_set(*potential, vocab);
  return r;
}

std::vector<std::string> hallucinated_objects(const CaptionRecord& r) {
  std::vector<std::string> out;
  for (const auto& m : r.mentioned) {
    if (!contains(r.ground_truth, m)) out.push_back(m);
  }
  return out;
}

ChairReport chair_score(const std::vector<CaptionRecord>& records) {
  if (records.empty()) throw InvalidInput("chair_score: no records");
  ChairReport rep;
  rep.captions = records.size();
  for (const auto& r : records) {
    const std::size_t h = hallucinated_objects(r).size();
    rep.hallucinated_objects += h;
    rep.mentioned_objects += r.mentioned.size();
    rep.captions_with_hallucination += h > 0 ? 1 : 0;
  }
  rep.chair_i_defined = rep.mentioned_objects > 0;
  rep.chair_i = ratio(rep.hallucinated_objects, rep.mentioned_objects);
  rep.chair_s = ratio(rep.captions_with_hallucination, rep.captions);
  return rep;
}

// ---------------------------------------------------------------------------

const char* pope_split_name(PopeSplit s) {
  switch (s) {
    case PopeSplit::kRandom: return "random";
    case PopeSplit::kPopular: return "popular";
    case PopeSplit::kAdversarial: return "adversarial";
  }
  return "?";
}

PopeSplit parse_pope_split(const std::string& name) {
  if (name == "random") return PopeSplit::kRandom;
  if (name == "popular") return PopeSplit::kPopular;
  if (name == "adversarial") return PopeSplit::kAdversarial;
  throw InvalidInput("unknown POPE split '" + name + "' (expected random, popular or adversarial)");
}

std::string pope_question(const std::string& object) { return "Is there a " + object + " in the image?"; }

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

std::uint64_t cooc_count(const std::map<std::string, std::map<std::string, std::uint64_t>>& table,
                         const std::string& a, const std::string& b) {
  if (auto it = table.find(a); it != table.end()) {
    if (auto jt = it->second.find(b); jt != it->second.end()) return jt->second;
  }
  if (auto it = table.find(b); it != table.end()) {
    if (auto jt = it->second.find(a); jt != it->second.end()) return jt->second;
  }
  return 0;
}

}  // namespace

PopeGeneration pope_generate(const std::vector<ImageObjects>& annotations,
                             const std::map<std::string, std::uint64_t>& frequency,
                             const std::map<std::string, std::map<std::string, std::uint64_t>>& cooccurrence,
                             PopeSplit split, std::uint32_t k, std::uint64_t seed) {
  if (k < 2 || k % 2 != 0) throw InvalidInput("pope_generate: questions per image must be even and >= 2");
  if (frequency.empty()) throw InvalidInput("pope_generate: empty frequency table");
  if (split == PopeSplit::kAdversarial && cooccurrence.empty()) {
    throw InvalidInput("pope_generate: adversarial split needs a co-occurrence table");
  }
  const std::size_t half = k / 2;
  Rng rng(seed, Rng::Stream::kPope);
  PopeGeneration gen;

  for (const ImageObjects& img : annotations) {
    std::set<std::string> present_set(img.objects.begin(), img.objects.end());
    std::vector<std::string> present(present_set.begin(), present_set.end());
    std::vector<std::string> absent;
    for (const auto& [name, count] : frequency) {
      if (present_set.count(name) == 0) absent.push_back(name);
    }

    shuffle(present, rng);
    if (present.size() > half) present.resize(half);

    switch (split) {
      case PopeSplit::kRandom:
        shuffle(absent, rng);
        break;
      case PopeSplit::kPopular:
        std::stable_sort(absent.begin(), absent.end(), [&](const std::string& a, const std::string& b) {
          return frequency.at(a) > frequency.at(b);
        });
        break;
      case PopeSplit::kAdversarial: {
        std::map<std::string, std::uint64_t> score;
        for (const auto& a : absent) {
          std::uint64_t s = 0;
          for (const auto& p : present_set) s += cooc_count(cooccurrence, p, a);
          score[a] = s;
        }
        std::stable_sort(absent.begin(), absent.end(), [&](const std::string& a, const std::string& b) {
          if (score[a] != score[b]) return score[a] > score[b];
          return frequency.at(a) > frequency.at(b);
        });
        break;
      }
    }
    if (absent.size() > half) absent.resize(half);

    if (present.size() < half || absent.size() < half) {
      ++gen.short_images;
      gen.warnings.push_back("image " + img.image_id + ": " + std::to_string(present.size()) + " positives, " +
                             std::to_string(absent.size()) + " negatives (wanted " + std::to_string(half) +
                             " each)");
    }
    for (const auto& o : present) gen.items.push_back({img.image_id, o, true, split, std::nullopt});
    for (const auto& o : absent) gen.items.push_back({img.image_id, o, false, split, std::nullopt});
  }
  return gen;
}

PopeScore pope_score_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  PopeScore s;
  s.tp = tp;
  s.fp = fp;
  s.tn = tn;
  s.fn = fn;
  const std::size_t total = tp + fp + tn + fn;
  s.precision_defined = tp + fp > 0;
  s.recall_defined = tp + fn > 0;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1_defined = s.precision + s.recall > 0.0;
  // F1 = 2TP / (2TP + FP + FN), identical to the harmonic mean when defined.
  s.f1 = s.f1_defined ? ratio(2 * tp, 2 * tp + fp + fn) : 0.0;
  s.accuracy = ratio(tp + tn, total);
  s.yes_ratio = ratio(tp + fp, total);
  return s;
}

std::map<std::string, PopeScore> pope_f1(const std::vector<PopeItem>& items) {
  if (items.empty()) throw InvalidInput("pope_f1: no items");
  struct Counts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const PopeItem& it = items[i];
    if (!it.answer) throw InvalidInput("pope_f1: item " + std::to_string(i) + " has no answer");
    for (const std::string& key : {std::string(pope_split_name(it.split)), std::string("all")}) {
      Counts& c = counts[key];
      if (*it.answer && it.gold) ++c.tp;
      else if (*it.answer && !it.gold) ++c.fp;
      else if (!*it.answer && !it.gold) ++c.tn;
      else ++c.fn;
    }
  }
  std::map<std::string, PopeScore> out;
  for (const auto& [key, c] : counts) out[key] = pope_score_from_counts(c.tp, c.fp, c.tn, c.fn);
  return out;
}

// ---------------------------------------------------------------------------

AmberReport amber_score(const std::vector<CaptionRecord>& records) {
  if (records.empty()) throw InvalidInput("amber_score: no records");
  AmberReport rep;
  rep.captions = records.size();
  double macro_sum = 0.0;
  std::size_t macro_n = 0;
  for (const auto& r : records) {
    const auto hall = hallucinated_objects(r);
    rep.hallucinated_objects += hall.size();
    rep.mentioned_objects += r.mentioned.size();
    rep.captions_with_hallucination += hall.empty() ? 0 : 1;

    if (r.ground_truth.empty()) {
      ++rep.cover_excluded_records;
    } else {
      std::size_t covered = 0;
      for (const auto& t : r.ground_truth) covered += contains(r.mentioned, t) ? 1 : 0;
      rep.covered_objects += covered;
      rep.truth_objects += r.ground_truth.size();
      macro_sum += ratio(covered, r.ground_truth.size());
      ++macro_n;
    }

    if (!r.potential) ++rep.missing_potential_records;
    const std::vector<std::string> empty;
    const auto& potential = r.potential ? *r.potential : empty;
    for (const auto& h : hall) rep.cog_hits += contains(potential, h) ? 1 : 0;
  }
  rep.chair_defined = rep.mentioned_objects > 0;
  rep.chair = ratio(rep.hallucinated_objects, rep.mentioned_objects);
  rep.cover_defined = rep.truth_objects > 0;
  rep.cover = ratio(rep.covered_objects, rep.truth_objects);
  rep.cover_macro = macro_n == 0 ? 0.0 : macro_sum / static_cast<double>(macro_n);
  rep.hal = ratio(rep.captions_with_hallucination, rep.captions);
  rep.cog_defined = rep.hallucinated_objects > 0;
  rep.cog = ratio(rep.cog_hits, rep.hallucinated_objects);
  return rep;
}

}  // namespace deco
