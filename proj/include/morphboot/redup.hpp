// Copyright 2026 The morphboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CV-template reduplication of verb roots.
//
// A template matches a prefix of the root's graphemes. Matching rules:
//   - C matches any non-vowel, V any vowel; (C), (n) and (h) are optional
//     consonant / nasal / literal-h positions.
//   - A match ending in a consonant must not be followed by a vowel (the copy
//     ends on a syllable boundary).
//   - `context` is the exact remainder of the root after the match.
//   - `whole_root` templates must consume the entire root.
// Among the candidates of one reduplication type, partial templates are
// preferred over whole-root ones, then the longest match, then table order.
// The mutation turns the matched graphemes into the reduplicant.

#ifndef MORPHBOOT_REDUP_HPP_
#define MORPHBOOT_REDUP_HPP_

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morphboot {

enum class RedupType { kIterative, kInceptive, kExtended };

inline constexpr RedupType kAllRedupTypes[] = {RedupType::kIterative, RedupType::kInceptive,
                                               RedupType::kExtended};

enum class PatternElement { kC, kV, kOptC, kOptNasal, kOptH };

enum class Mutation {
  kIdentity,              // copy the match
  kAppendH,               // copy, closing with h
  kEchoVowel,             // mandatory C/V positions, then the vowel again
  kEchoVowelH,            // as kEchoVowel, then h
  kInsertNasalEchoVowelH  // copy CV, then nasal + vowel + h
};

struct PhonClasses {
  std::set<std::string> vowels;
  std::set<std::string> nasals;
  std::string h = "h";
  std::string inserted_nasal = "ng";

  bool is_vowel(const std::string& g) const { return vowels.count(g) > 0; }
  bool is_nasal(const std::string& g) const { return nasals.count(g) > 0; }
};

struct ReduplicationTemplate {
  RedupType type = RedupType::kIterative;
  std::string label;  // how the pattern is written in reference tables
  std::vector<PatternElement> pattern;
  std::vector<std::string> context;
  bool whole_root = false;
  Mutation mutation = Mutation::kIdentity;
};

std::string_view to_string(RedupType type);
RedupType parse_redup_type(std::string_view text);
std::string_view to_string(Mutation mutation);
Mutation parse_mutation(std::string_view text);

// Parses "CV(C)CV(h)"-style patterns. Throws ValidationError; patterns must
// begin with C.
std::vector<PatternElement> parse_pattern(std::string_view text);

// Seven-example template table for the three reduplication types.
std::vector<ReduplicationTemplate> default_templates();

// Reduplicant for `root` under `type`, or nullopt when no template matches.
std::optional<std::vector<std::string>> reduplicate(std::span<const std::string> root,
                                                    RedupType type,
                                                    std::span<const ReduplicationTemplate> templates,
                                                    const PhonClasses& classes);

}  // namespace morphboot

#endif  // MORPHBOOT_REDUP_HPP_
