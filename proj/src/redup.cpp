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

#include "morphboot/redup.hpp"

#include <algorithm>

#include "morphboot/error.hpp"

namespace morphboot {
namespace {

struct Match {
  std::size_t length = 0;
  // Root index matched by each pattern element, or -1 when an optional
  // element was skipped.
  std::vector<int> positions;
};

bool element_accepts(PatternElement e, const std::string& g, const PhonClasses& classes) {
  switch (e) {
    case PatternElement::kC:
    case PatternElement::kOptC:
      return !classes.is_vowel(g);
    case PatternElement::kV:
      return classes.is_vowel(g);
    case PatternElement::kOptNasal:
      return classes.is_nasal(g);
    case PatternElement::kOptH:
      return g == classes.h;
  }
  return false;
}

bool is_optional(PatternElement e) {
  return e == PatternElement::kOptC || e == PatternElement::kOptNasal || e == PatternElement::kOptH;
}

void match_from(std::span<const std::string> root, const std::vector<PatternElement>& pattern,
                std::size_t element, std::size_t pos, std::vector<int>& positions,
                const PhonClasses& classes, std::vector<Match>& out) {
  if (element == pattern.size()) {
    out.push_back(Match{pos, positions});
    return;
  }
  const PatternElement e = pattern[element];
  if (pos < root.size() && element_accepts(e, root[pos], classes)) {
    positions.push_back(static_cast<int>(pos));
    match_from(root, pattern, element + 1, pos + 1, positions, classes, out);
    positions.pop_back();
  }
  if (is_optional(e)) {
    positions.push_back(-1);
    match_from(root, pattern, element + 1, pos, positions, classes, out);
    positions.pop_back();
  }
}

std::vector<std::string> mutate(const ReduplicationTemplate& tpl, const Match& m,
                                std::span<const std::string> root, const PhonClasses& classes) {
  std::vector<std::string> all, mandatory;
  std::string vowel;
  for (std::size_t i = 0; i < tpl.pattern.size(); ++i) {
    if (m.positions[i] < 0) continue;
    const std::string& g = root[m.positions[i]];
    all.push_back(g);
    if (!is_optional(tpl.pattern[i])) mandatory.push_back(g);
    if (tpl.pattern[i] == PatternElement::kV && vowel.empty()) vowel = g;
  }
  switch (tpl.mutation) {
    case Mutation::kIdentity:
      return all;
    case Mutation::kAppendH:
      if (all.empty() || all.back() != classes.h) all.push_back(classes.h);
      return all;
    case Mutation::kEchoVowel:
      mandatory.push_back(vowel);
      return mandatory;
    case Mutation::kEchoVowelH:
      mandatory.push_back(vowel);
      mandatory.push_back(classes.h);
      return mandatory;
    case Mutation::kInsertNasalEchoVowelH:
      mandatory.push_back(classes.inserted_nasal);
      mandatory.push_back(vowel);
      mandatory.push_back(classes.h);
      return mandatory;
  }
  return all;
}

std::vector<std::string> letters(std::initializer_list<const char*> gs) {
  return {gs.begin(), gs.end()};
}

}  // namespace

std::string_view to_string(RedupType type) {
  switch (type) {
    case RedupType::kIterative:
      return "iterative";
    case RedupType::kInceptive:
      return "inceptive";
    case RedupType::kExtended:
      return "extended";
  }
  return "?";
}

RedupType parse_redup_type(std::string_view text) {
  for (RedupType t : kAllRedupTypes) {
    if (to_string(t) == text) return t;
  }
  throw ValidationError("unknown reduplication type '" + std::string(text) + "'");
}

std::string_view to_string(Mutation mutation) {
  switch (mutation) {
    case Mutation::kIdentity:
      return "identity";
    case Mutation::kAppendH:
      return "append-h";
    case Mutation::kEchoVowel:
      return "echo-vowel";
    case Mutation::kEchoVowelH:
      return "echo-vowel-h";
    case Mutation::kInsertNasalEchoVowelH:
      return "insert-nasal-echo-vowel-h";
  }
  return "?";
}

Mutation parse_mutation(std::string_view text) {
  for (Mutation m : {Mutation::kIdentity, Mutation::kAppendH, Mutation::kEchoVowel,
                     Mutation::kEchoVowelH, Mutation::kInsertNasalEchoVowelH}) {
    if (to_string(m) == text) return m;
  }
  throw ValidationError("unknown reduplication mutation '" + std::string(text) + "'");
}

std::vector<PatternElement> parse_pattern(std::string_view text) {
  std::vector<PatternElement> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == 'C') {
      out.push_back(PatternElement::kC);
    } else if (c == 'V') {
      out.push_back(PatternElement::kV);
    } else if (c == '(' && i + 2 < text.size() && text[i + 2] == ')') {
      switch (text[i + 1]) {
        case 'C':
          out.push_back(PatternElement::kOptC);
          break;
        case 'n':
          out.push_back(PatternElement::kOptNasal);
          break;
        case 'h':
          out.push_back(PatternElement::kOptH);
          break;
        default:
          throw ValidationError("bad optional element in pattern '" + std::string(text) + "'");
      }
      i += 2;
    } else {
      throw ValidationError("bad pattern '" + std::string(text) + "'");
    }
  }
  if (out.empty() || out.front() != PatternElement::kC) {
    throw ValidationError("pattern '" + std::string(text) + "' must begin with C");
  }
  return out;
}

std::vector<ReduplicationTemplate> default_templates() {
  using M = Mutation;
  using T = RedupType;
  return {
      {T::kIterative, "CVC", parse_pattern("CVC"), {}, false, M::kIdentity},
      {T::kIterative, "CV(C)CV(h)", parse_pattern("CV(C)CV(h)"), {}, true, M::kIdentity},
      {T::kIterative, "CVnV(h)", parse_pattern("CV(h)"), {}, true, M::kInsertNasalEchoVowelH},
      {T::kInceptive, "CV(n)(h)", parse_pattern("CV(n)(h)"), {}, false, M::kAppendH},
      {T::kExtended, "CVC(C) || _men", parse_pattern("CVC(C)"), letters({"m", "e", "n"}), false,
       M::kEchoVowelH},
      {T::kExtended, "CVC(C) || _me", parse_pattern("CVC(C)"), letters({"m", "e"}), false,
       M::kEchoVowel},
  };
}

std::optional<std::vector<std::string>> reduplicate(std::span<const std::string> root,
                                                    RedupType type,
                                                    std::span<const ReduplicationTemplate> templates,
                                                    const PhonClasses& classes) {
  const ReduplicationTemplate* best = nullptr;
  Match best_match;
  for (const ReduplicationTemplate& tpl : templates) {
    if (tpl.type != type) continue;
    std::vector<Match> matches;
    std::vector<int> positions;
    match_from(root, tpl.pattern, 0, 0, positions, classes, matches);
    for (const Match& m : matches) {
      if (m.length == 0) continue;
      if (tpl.whole_root && m.length != root.size()) continue;
      if (!tpl.context.empty()) {
        const auto rest = root.subspan(m.length);
        if (!std::equal(rest.begin(), rest.end(), tpl.context.begin(), tpl.context.end())) continue;
      }
      if (m.length < root.size() && !classes.is_vowel(root[m.length - 1]) &&
          classes.is_vowel(root[m.length])) {
        continue;
      }
      const bool better =
          best == nullptr || (best->whole_root && !tpl.whole_root) ||
          (best->whole_root == tpl.whole_root && m.length > best_match.length);
      if (better) {
        best = &tpl;
        best_match = m;
      }
    }
  }
  if (best == nullptr) return std::nullopt;
  auto reduplicant = mutate(*best, best_match, root, classes);
  if (reduplicant.empty()) return std::nullopt;
  return reduplicant;
}

}  // namespace morphboot
