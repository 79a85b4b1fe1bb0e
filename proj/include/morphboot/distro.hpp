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

// Distributional resampling. An analysis is reduced to its morph-tag
// sequence M (the root counts as one pseudo-tag), scored by the mean log
// joint probability of adjacent tags, ranked, bucketed and redrawn with
// Zipf-distributed bucket weights.

#ifndef MORPHBOOT_DISTRO_HPP_
#define MORPHBOOT_DISTRO_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "morphboot/datagen.hpp"
#include "morphboot/exec.hpp"
#include "morphboot/transducer.hpp"

namespace morphboot {

inline const std::string kRootTag = "ROOT";

// Tag sequence of a tokenised target, with "ROOT" standing in for the root.
std::vector<std::string> tag_sequence(std::span<const std::string> target_tokens);

struct TagCorpusOptions {
  bool first_analysis_only = false;
  Exec exec = Exec::kParallel;
};

struct TagCorpusStats {
  std::size_t words = 0;
  std::size_t analysed = 0;
  std::size_t sequences = 0;
};

// Tag sequences of every analysis of every word (graphemised) the analyzer
// covers. Words without an analysis contribute nothing.
std::vector<std::vector<std::string>> tag_corpus(const Transducer& analyzer,
                                                 std::span<const std::vector<std::string>> words,
                                                 const TagCorpusOptions& options = {},
                                                 TagCorpusStats* stats = nullptr);

class BigramTable {
 public:
  using Key = std::pair<std::string, std::string>;

  void add(const std::string& a, const std::string& b, std::uint64_t count = 1);

  std::uint64_t count(const std::string& a, const std::string& b) const;
  std::uint64_t total() const { return total_; }
  // Joint probability; unseen pairs get epsilon().
  double prob(const std::string& a, const std::string& b) const;
  double epsilon() const;
  const std::map<Key, std::uint64_t>& counts() const { return counts_; }

  void write(std::ostream& os) const;
  static BigramTable read(std::istream& is);

 private:
  std::map<Key, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Throws EstimationError when no sequence has an adjacent pair.
BigramTable estimate_bigrams(std::span<const std::vector<std::string>> tag_sequences);

// Mean natural-log joint probability of adjacent tags. Throws
// EstimationError for |M| < 2.
double score(std::span<const std::string> tags, const BigramTable& table);

std::vector<double> score_pairs(std::span<const TrainingPair> pairs, const BigramTable& table,
                                Exec exec = Exec::kParallel);

// (1/i^s) / sum_j (1/j^s) for i = 1..k.
std::vector<double> zipf_weights(std::size_t k, double s);

// Bucket b holds ranks [floor(b N / k), floor((b + 1) N / k)).
std::vector<std::pair<std::size_t, std::size_t>> bucket_bounds(std::size_t n, std::size_t k);

struct ResampleConfig {
  std::size_t k = 10;
  double s = 1.0;
  std::size_t n = 0;  // 0: same size as the input
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;
};

struct ResampleStats {
  std::vector<std::size_t> bucket_sizes;
  std::vector<std::size_t> bucket_draws;
  std::size_t empty_buckets = 0;
};

std::vector<TrainingPair> resample(std::span<const TrainingPair> pairs, const BigramTable& table,
                                   const ResampleConfig& config, ResampleStats* stats = nullptr);

}  // namespace morphboot

#endif  // MORPHBOOT_DISTRO_HPP_
