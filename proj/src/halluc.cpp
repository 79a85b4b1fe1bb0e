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

#include "morphboot/halluc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "morphboot/error.hpp"

namespace morphboot {
namespace {

std::optional<std::size_t> rightmost(std::span<const std::string> hay,
                                     std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > hay.size()) return std::nullopt;
  for (std::size_t i = hay.size() - needle.size() + 1; i-- > 0;) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + i)) return i;
  }
  return std::nullopt;
}

}  // namespace

RootSpan isolate_root(const TrainingPair& pair) {
  RootSpan span;
  int depth = 0;
  enum { kBefore, kInside, kAfter } where = kBefore;
  for (const std::string& tok : pair.target) {
    if (tok == "[") ++depth;
    const bool bare = depth == 0;
    if (tok == "]") --depth;
    if (depth < 0) throw InputError("unbalanced target '" + format_pair(pair) + "'");
    if (bare) {
      if (where == kAfter) throw InputError("target has two bare spans: '" + format_pair(pair) + "'");
      where = kInside;
      span.root.push_back(tok);
    } else if (where == kBefore) {
      span.prefix.push_back(tok);
    } else {
      where = kAfter;
      span.suffix.push_back(tok);
    }
  }
  if (span.root.empty()) throw InputError("target has no root: '" + format_pair(pair) + "'");
  return span;
}

std::optional<std::size_t> locate_root(std::span<const std::string> source,
                                       std::span<const std::string> root) {
  for (std::size_t len = root.size(); len > 0; --len) {
    if (auto at = rightmost(source, root.first(len))) return at;
  }
  return std::nullopt;
}

std::vector<TrainingPair> hallucinate(std::span<const TrainingPair> pairs, const HallucConfig& config,
                                      std::span<const ReduplicationTemplate> templates,
                                      const PhonClasses& classes, HallucStats* stats) {
  if (!(config.fraction > 0 && config.fraction <= 1)) {
    throw ConfigError("hallucination fraction must lie in (0, 1]");
  }
  const std::size_t n = pairs.size();
  const auto m = std::min(
      n, static_cast<std::size_t>(std::floor(config.fraction * static_cast<double>(n) + 1e-9)));

  // Partial Fisher-Yates: the first m slots become the sample.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::size_t> sample(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(sample.begin(), sample.end());

  enum class Outcome { kProduced, kNoTemplate, kUnaligned };
  std::vector<TrainingPair> made(m);
  std::vector<Outcome> outcome(m);
  parallel_for(m, config.exec, [&](std::size_t k) {
    const TrainingPair& pair = pairs[sample[k]];
    std::mt19937_64 item_rng(derive_seed(config.seed, sample[k]));
    const RedupType type = kAllRedupTypes[std::uniform_int_distribution<int>(0, 2)(item_rng)];
    const RootSpan span = isolate_root(pair);
    const auto red = reduplicate(span.root, type, templates, classes);
    if (!red) {
      outcome[k] = Outcome::kNoTemplate;
      return;
    }
    const auto at = locate_root(pair.source, span.root);
    if (!at) {
      outcome[k] = Outcome::kUnaligned;
      return;
    }
    TrainingPair& out = made[k];
    out.source.assign(pair.source.begin(), pair.source.begin() + static_cast<std::ptrdiff_t>(*at));
    out.source.insert(out.source.end(), red->begin(), red->end());
    out.source.insert(out.source.end(), pair.source.begin() + static_cast<std::ptrdiff_t>(*at),
                      pair.source.end());
    out.target = span.prefix;
    out.target.insert(out.target.end(), {"[", config.tag, "]"});
    out.target.insert(out.target.end(), span.root.begin(), span.root.end());
    out.target.insert(out.target.end(), span.suffix.begin(), span.suffix.end());
    outcome[k] = Outcome::kProduced;
  });

  HallucStats st;
  st.sampled = m;
  std::vector<TrainingPair> result;
  for (std::size_t k = 0; k < m; ++k) {
    switch (outcome[k]) {
      case Outcome::kProduced:
        result.push_back(std::move(made[k]));
        break;
      case Outcome::kNoTemplate:
        ++st.no_template;
        break;
      case Outcome::kUnaligned:
        ++st.unaligned;
        break;
    }
  }
  st.produced = result.size();
  if (stats) *stats = st;
  return result;
}

}  // namespace morphboot
