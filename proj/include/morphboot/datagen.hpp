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

// Training pairs: generation from the analyzer, tokenisation, splitting and
// the tab-separated pair file shared by every pipeline stage.

#ifndef MORPHBOOT_DATAGEN_HPP_
#define MORPHBOOT_DATAGEN_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "morphboot/exec.hpp"
#include "morphboot/transducer.hpp"

namespace morphboot {

struct TrainingPair {
  std::vector<std::string> source;  // surface graphemes
  std::vector<std::string> target;  // analysis tokens: [ a . b ] x y [ c ]

  bool operator==(const TrainingPair&) const = default;
  auto operator<=>(const TrainingPair&) const = default;
};

// "[3sg.3ua.nonpast]" -> "[ 3sg . 3ua . nonpast ]"; bare symbols pass as is.
// Throws TokenizationError on a malformed tag.
std::vector<std::string> tokenize_target(std::span<const std::string> analysis);

// Inverse of tokenize_target.
std::vector<std::string> detokenize_target(std::span<const std::string> tokens);

// Bracket tags of a token sequence, one string per tag ("3sg.3ua.nonpast").
std::vector<std::string> target_tags(std::span<const std::string> tokens);

struct GenerateOptions {
  std::size_t max_length = 256;
  Exec exec = Exec::kParallel;
};

struct GenerateStats {
  std::size_t raw = 0;
  std::size_t unique = 0;
};

// Draws n walks (walk i seeded with derive_seed(seed, i)), removes exact
// duplicate pairs keeping first occurrences. Serial and parallel execution
// give identical lists.
std::vector<TrainingPair> generate_pairs(const Transducer& analyzer, std::size_t n,
                                         std::uint64_t seed, const GenerateOptions& options = {},
                                         GenerateStats* stats = nullptr);

struct DatasetSplit {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> dev;
  std::vector<TrainingPair> test;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

// train = floor(n r0), dev = floor(n r1), test takes the remainder.
SplitSizes split_sizes(std::size_t n, const std::array<double, 3>& ratios);

// Seeded shuffle then contiguous slicing. Throws ConfigError on bad ratios.
DatasetSplit split(std::span<const TrainingPair> pairs, const std::array<double, 3>& ratios,
                   std::uint64_t seed);

std::string format_pair(const TrainingPair& pair);
TrainingPair parse_pair(const std::string& line);

void write_pairs(std::ostream& os, std::span<const TrainingPair> pairs);
std::vector<TrainingPair> read_pairs(std::istream& is);
void save_pairs(const std::string& path, std::span<const TrainingPair> pairs);
std::vector<TrainingPair> load_pairs(const std::string& path);

}  // namespace morphboot

#endif  // MORPHBOOT_DATAGEN_HPP_
