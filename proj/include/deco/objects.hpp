// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace deco {

/// Plural -> singular for a single lowercase word: an irregular-noun table
/// first, then -ies -> -y, -(ch|sh|ss|x|z)es -> drop "es", a bare -s dropped
/// unless the word ends in -ss, -us or -is.
std::string singularize(std::string_view word);

/// Object-name normalization and dictionary extraction against a supplied
/// object universe and synonym map.
class ObjectVocabulary {
 public:
  ObjectVocabulary() = default;
  /// Universe entries and synonym keys/values are normalized on the way in.
  ObjectVocabulary(const std::vector<std::string>& universe, const std::map<std::string, std::string>& synonyms);

  /// Lowercase, trim, collapse whitespace, singularize the last word, then map
  /// through the synonym table.
  std::string normalize(std::string_view name) const;

  /// Distinct universe objects mentioned in free text, in order of first
  /// mention. Longest phrase (up to three words) wins at each position.
  std::vector<std::string> extract(std::string_view caption) const;

  const std::set<std::string>& universe() const { return universe_; }
  bool empty() const { return universe_.empty(); }

 private:
  std::string canonical(std::string_view name) const;

  std::set<std::string> universe_;
  std::map<std::string, std::string> synonyms_;
  std::size_t max_words_ = 3;
};

}  // namespace deco
