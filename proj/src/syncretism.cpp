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

#include "morphboot/syncretism.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "morphboot/error.hpp"
#include "morphboot/strings.hpp"

namespace morphboot {
namespace {

bool context_matches(const std::vector<std::string>& components, const SyncretismRule& rule) {
  if (rule.context.empty()) return true;
  if (rule.context.size() != components.size()) return false;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (rule.context[i] != "*" && rule.context[i] != components[i]) return false;
  }
  return true;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

SyncretismRule parse_syncretism_rule(std::string_view text) {
  const auto words = strings::split_ws(text);
  auto fail = [&]() -> SyncretismRule {
    throw ValidationError("bad syncretism rule '" + std::string(text) + "'");
  };
  if (words.size() < 3) return fail();
  SyncretismRule rule;
  rule.name = words[0];
  rule.alternatives = strings::split(words[2], '|');
  if (rule.alternatives.size() < 2) return fail();
  if (words[1] == "tags") {
    rule.kind = SyncretismRule::Kind::kTags;
    if (words.size() != 3) return fail();
    return rule;
  }
  if (words[1] != "components" || words.size() < 5 || words[3] != "at") return fail();
  rule.kind = SyncretismRule::Kind::kComponents;
  for (const auto& p : strings::split(words[4], ',')) {
    try {
      rule.positions.push_back(std::stoul(p));
    } catch (const std::exception&) {
      return fail();
    }
  }
  if (words.size() == 7 && words[5] == "when") {
    rule.context = strings::split(words[6], '.');
  } else if (words.size() != 5) {
    return fail();
  }
  return rule;
}

std::vector<std::string> expand_tag(const std::string& tag, std::span<const SyncretismRule> rules) {
  std::set<std::string> seen{tag};
  std::deque<std::string> queue{tag};
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    auto visit = [&](std::string next) {
      if (seen.insert(next).second) queue.push_back(std::move(next));
    };
    for (const SyncretismRule& rule : rules) {
      if (rule.kind == SyncretismRule::Kind::kTags) {
        if (contains(rule.alternatives, cur)) {
          for (const auto& alt : rule.alternatives) visit(alt);
        }
        continue;
      }
      auto components = strings::split(cur, '.');
      if (!context_matches(components, rule)) continue;
      for (std::size_t p : rule.positions) {
        if (p >= components.size() || !contains(rule.alternatives, components[p])) continue;
        const std::string original = components[p];
        for (const auto& alt : rule.alternatives) {
          components[p] = alt;
          visit(strings::join(components, "."));
        }
        components[p] = original;
      }
    }
  }
  return {seen.begin(), seen.end()};
}

std::vector<std::vector<std::string>> syncretism_expand(std::span<const std::string> analysis,
                                                        std::span<const SyncretismRule> rules,
                                                        const std::optional<std::string>& only_rule) {
  std::vector<SyncretismRule> active;
  for (const auto& r : rules) {
    if (!only_rule || r.name == *only_rule) active.push_back(r);
  }

  // Split into literal tokens and bracketed tags, each tag with its variants.
  struct Piece {
    std::vector<std::string> literal;
    std::vector<std::string> variants;  // non-empty for a tag piece
  };
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < analysis.size(); ++i) {
    if (analysis[i] != "[") {
      pieces.push_back(Piece{{analysis[i]}, {}});
      continue;
    }
    std::size_t j = i + 1;
    std::string tag;
    while (j < analysis.size() && analysis[j] != "]") tag += analysis[j++];
    if (j == analysis.size()) {
      // Unbalanced: nothing sensible to expand, keep the token as is.
      pieces.push_back(Piece{{analysis[i]}, {}});
      continue;
    }
    pieces.push_back(Piece{{}, expand_tag(tag, active)});
    i = j;
  }

  std::vector<std::vector<std::string>> results{{}};
  for (const Piece& piece : pieces) {
    if (piece.variants.empty()) {
      for (auto& r : results) r.push_back(piece.literal[0]);
      continue;
    }
    std::vector<std::vector<std::string>> next;
    for (const auto& r : results) {
      for (const auto& v : piece.variants) {
        auto extended = r;
        extended.push_back("[");
        const auto parts = strings::split(v, '.');
        for (std::size_t k = 0; k < parts.size(); ++k) {
          if (k) extended.push_back(".");
          extended.push_back(parts[k]);
        }
        extended.push_back("]");
        next.push_back(std::move(extended));
      }
    }
    results = std::move(next);
  }
  std::sort(results.begin(), results.end());
  results.erase(std::unique(results.begin(), results.end()), results.end());
  return results;
}

}  // namespace morphboot
