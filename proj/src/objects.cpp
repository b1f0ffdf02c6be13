// SPDX-License-Identifier: Apache-2.0
#include "deco/objects.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace deco {

namespace {

const std::map<std::string, std::string, std::less<>>& irregular() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"people", "person"}, {"men", "man"},       {"women", "woman"},   {"children", "child"},
      {"mice", "mouse"},    {"geese", "goose"},   {"teeth", "tooth"},   {"feet", "foot"},
      {"knives", "knife"},  {"wolves", "wolf"},   {"leaves", "leaf"},   {"shelves", "shelf"},
      {"halves", "half"},   {"calves", "calf"},   {"loaves", "loaf"},   {"buses", "bus"},
      {"skis", "ski"},      {"sheep", "sheep"},   {"fish", "fish"},     {"deer", "deer"},
      {"glasses", "glasses"}, {"scissors", "scissors"}, {"pants", "pants"}, {"jeans", "jeans"},
      {"shorts", "shorts"}, {"species", "species"}, {"series", "series"}, {"dice", "die"},
  };
  return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) != 0) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

std::string singularize(std::string_view word) {
  if (auto it = irregular().find(word); it != irregular().end()) return it->second;
  std::string w(word);
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  for (std::string_view suf : {"ches", "shes", "sses", "xes", "zes"}) {
    if (w.size() > suf.size() && ends_with(w, suf)) return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (w.size() > 3 && ends_with(w, "s")) return w.substr(0, w.size() - 1);
  return w;
}

ObjectVocabulary::ObjectVocabulary(const std::vector<std::string>& universe,
                                   const std::map<std::string, std::string>& synonyms) {
  for (const auto& [from, to] : synonyms) synonyms_[canonical(from)] = canonical(to);
  for (const auto& name : universe) universe_.insert(normalize(name));
  for (const auto& [from, to] : synonyms_) {
    max_words_ = std::max<std::size_t>(max_words_, split_words(from).size());
  }
}

std::string ObjectVocabulary::canonical(std::string_view name) const {
  std::vector<std::string> words;
  std::istringstream in{std::string(name)};
  for (std::string w; in >> w;) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(std::move(w));
  }
  if (words.empty()) return {};
  words.back() = singularize(words.back());
  return join(words, 0, words.size());
}

std::string ObjectVocabulary::normalize(std::string_view name) const {
  std::string c = canonical(name);
  if (auto it = synonyms_.find(c); it != synonyms_.end()) return it->second;
  return c;
}

std::vector<std::string> ObjectVocabulary::extract(std::string_view caption) const {
  const std::vector<std::string> words = split_words(caption);
  std::vector<std::string> found;
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t matched = 0;
    for (std::size_t n = std::min(max_words_, words.size() - i); n >= 1; --n) {
      const std::string name = normalize(join(words, i, i + n));
      if (universe_.count(name) != 0) {
        if (std::find(found.begin(), found.end(), name) == found.end()) found.push_back(name);
        matched = n;
        break;
      }
    }
    i += matched > 0 ? matched : 1;
  }
  return found;
}

}  // namespace deco
