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

#ifndef MORPHBOOT_SYNCRETISM_HPP_
#define MORPHBOOT_SYNCRETISM_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morphboot {

// Declarative equivalence between analyses that share a surface form.
//
//   kTags:       whole tags are interchangeable, e.g. 1sg.2.PST ~ 3sg.PST.
//   kComponents: at the listed component positions of a fused tag, the
//                alternatives are interchangeable, provided the tag matches
//                `context` (one pattern per component, "*" = any).
struct SyncretismRule {
  enum class Kind { kTags, kComponents };

  std::string name;
  Kind kind = Kind::kTags;
  std::vector<std::string> alternatives;
  std::vector<std::size_t> positions;
  std::vector<std::string> context;
};

// Parses the text after the `syncretism` keyword of a grammar file:
//   <name> tags A|B|...
//   <name> components A|B|... at 0,1 [when *.*.X]
SyncretismRule parse_syncretism_rule(std::string_view text);

// Closure of one tag (bracket content, dot-separated) under the rules.
std::vector<std::string> expand_tag(const std::string& tag, std::span<const SyncretismRule> rules);

// Closure of a tokenised analysis (`[ a . b ] x y [ c ]`). Every bracketed
// tag is expanded independently; the result is sorted, deduplicated and
// always contains the input. When `only_rule` is set, only rules with that
// name apply.
std::vector<std::vector<std::string>> syncretism_expand(
    std::span<const std::string> analysis, std::span<const SyncretismRule> rules,
    const std::optional<std::string>& only_rule = std::nullopt);

}  // namespace morphboot

#endif  // MORPHBOOT_SYNCRETISM_HPP_
