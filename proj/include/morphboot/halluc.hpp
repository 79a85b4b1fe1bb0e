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

#ifndef MORPHBOOT_HALLUC_HPP_
#define MORPHBOOT_HALLUC_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphboot/datagen.hpp"
#include "morphboot/redup.hpp"

namespace morphboot {

struct RootSpan {
  std::vector<std::string> prefix;  // target tokens before the root
  std::vector<std::string> root;    // bare grapheme tokens
  std::vector<std::string> suffix;  // target tokens after the root
};

// Splits a target into tags before the root, the root, tags after it.
// Throws InputError when the target has no (or more than one) bare span.
RootSpan isolate_root(const TrainingPair& pair);

// Start index of the root inside the surface: the rightmost exact copy, or
// failing that the rightmost copy of the longest root prefix (rules may
// rewrite the root's edge). nullopt when not even the first grapheme occurs.
std::optional<std::size_t> locate_root(std::span<const std::string> source,
                                       std::span<const std::string> root);

struct HallucConfig {
  double fraction = 0.08;
  std::uint64_t seed = 0;
  std::string tag = "REDUP";
  Exec exec = Exec::kParallel;
};

struct HallucStats {
  std::size_t sampled = 0;
  std::size_t produced = 0;
  std::size_t no_template = 0;
  std::size_t unaligned = 0;
};

// Samples floor(fraction * |pairs|) pairs without replacement, picks a
// reduplication type uniformly per pair and returns only the new pairs in
// input order.
std::vector<TrainingPair> hallucinate(std::span<const TrainingPair> pairs, const HallucConfig& config,
                                      std::span<const ReduplicationTemplate> templates,
                                      const PhonClasses& classes, HallucStats* stats = nullptr);

}  // namespace morphboot

#endif  // MORPHBOOT_HALLUC_HPP_
