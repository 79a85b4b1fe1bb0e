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

// End-to-end experiment: an incomplete analyzer generates training data, three
// neural analyzers are trained on plain, hallucinated and resampled data, and
// all four analyzers are scored on one test set mixing in-vocabulary forms,
// out-of-vocabulary roots and nominals, and reduplicated forms.
//
// Every stage writes into a directory named by a hash of everything its output
// depends on. A stage whose directory is complete is loaded instead of rerun,
// so changing any input produces a fresh directory rather than reusing stale
// output.

#ifndef MORPHBOOT_PIPELINE_HPP_
#define MORPHBOOT_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "morphboot/datagen.hpp"
#include "morphboot/eval.hpp"
#include "morphboot/grammar.hpp"
#include "morphboot/neural.hpp"

namespace morphboot {

struct PipelineSeeds {
  std::uint64_t generate = 11;
  std::uint64_t split = 12;
  std::uint64_t test = 13;
  std::uint64_t corpus = 14;
  std::uint64_t halluc = 15;
  std::uint64_t resample = 16;
  std::uint64_t train = 17;  // overrides hyper.seed
};

struct TestComposition {
  std::size_t in_vocab = 600;
  std::size_t oov_root = 150;
  std::size_t oov_nominal = 75;
  std::size_t redup = 150;
};

struct PipelineConfig {
  std::string grammar;
  std::string output_dir;
  PipelineSeeds seeds;
  std::size_t generate_n = 20000;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  double halluc_fraction = 0.08;
  std::size_t distro_k = 10;
  double distro_s = 1.0;
  std::size_t distro_n = 0;  // 0: size of the training set
  std::size_t corpus_n = 5000;
  double corpus_skew = 1.0;
  TestComposition test;
  neural::Hyper hyper;

  // Throws ConfigError when a file is missing or a value is out of range.
  void validate() const;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t h);

// Canonical key=value text of a hyperparameter set, used for hashing.
std::string canonical(const neural::Hyper& hyper);

// A word list drawn from the full grammar: each slot independently picks a
// distinct tag (or absence, ranked first for optional slots) with Zipf
// weights of exponent `skew`, and the analysis is realised through `full`.
std::vector<std::vector<std::string>> synthesize_corpus(const GrammarSpec& spec,
                                                        const CompiledGrammar& full, std::size_t n,
                                                        double skew, std::uint64_t seed);

struct TestSet {
  std::vector<GoldItem> items;
  std::vector<std::vector<std::string>> sources;  // graphemes of each surface
};

// First analysis (in token order) of each source, or none.
std::vector<Prediction> fst_predict(const Transducer& analyzer,
                                    std::span<const std::vector<std::string>> sources,
                                    Exec exec = Exec::kParallel);

struct ExperimentResult {
  std::vector<ReportRow> rows;  // FST, Base, Base+halluc, Base+halluc+resample
  std::string report_text;
  std::string report_kv;
};

// Runs every stage, writes report.txt and report.kv into output_dir and
// returns the same content. Progress goes to `log` when given. Throws
// ConfigError for an invalid config and StageError for a failed stage.
ExperimentResult run_experiment(const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace morphboot

#endif  // MORPHBOOT_PIPELINE_HPP_
