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

// Serial against OpenMP execution of the data-parallel kernels. The argument
// of every benchmark is the Exec value: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "morphboot/datagen.hpp"
#include "morphboot/distro.hpp"
#include "morphboot/eval.hpp"
#include "morphboot/grammar.hpp"
#include "morphboot/halluc.hpp"
#include "morphboot/neural.hpp"

namespace mb = morphboot;

namespace {

struct Shared {
  mb::GrammarSpec spec = mb::load_grammar(MORPHBOOT_DATA_DIR "/toylang.grammar");
  mb::CompiledGrammar grammar = mb::compile_grammar(spec);
  std::vector<mb::TrainingPair> pairs = mb::generate_pairs(grammar.analyzer, 4000, 3);
  mb::BigramTable table = [this] {
    std::vector<std::vector<std::string>> seqs;
    for (const auto& p : pairs) seqs.push_back(mb::tag_sequence(p.target));
    return mb::estimate_bigrams(seqs);
  }();
  mb::neural::Model<float> model = [this] {
    mb::neural::Hyper h;
    h.max_epochs = 1;
    h.max_updates = 20;
    const std::span<const mb::TrainingPair> all(pairs);
    return mb::neural::train(all.first(400), all.subspan(400, 100), h);
  }();
};

const Shared& shared() {
  static const Shared s;
  return s;
}

mb::Exec exec_of(const benchmark::State& st) { return st.range(0) ? mb::Exec::kParallel : mb::Exec::kSerial; }

void BM_Generate(benchmark::State& st) {
  const auto& s = shared();
  for (auto _ : st) {
    benchmark::DoNotOptimize(mb::generate_pairs(s.grammar.analyzer, 2000, 5, {.exec = exec_of(st)}));
  }
}

void BM_Score(benchmark::State& st) {
  const auto& s = shared();
  for (auto _ : st) benchmark::DoNotOptimize(mb::score_pairs(s.pairs, s.table, exec_of(st)));
}

void BM_Hallucinate(benchmark::State& st) {
  const auto& s = shared();
  const auto templates = s.spec.redup_templates();
  const auto classes = s.spec.phon_classes();
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        mb::hallucinate(s.pairs, {.fraction = 1.0, .seed = 1, .exec = exec_of(st)}, templates, classes));
  }
}

void BM_TagCorpus(benchmark::State& st) {
  const auto& s = shared();
  std::vector<std::vector<std::string>> words;
  for (const auto& p : s.pairs) words.push_back(p.source);
  for (auto _ : st) {
    benchmark::DoNotOptimize(mb::tag_corpus(s.grammar.analyzer, words, {.exec = exec_of(st)}));
  }
}

void BM_PredictBatch(benchmark::State& st) {
  const auto& s = shared();
  std::vector<std::vector<std::string>> sources;
  for (std::size_t i = 0; i < 64; ++i) sources.push_back(s.pairs[i].source);
  for (auto _ : st) benchmark::DoNotOptimize(mb::neural::predict_batch(s.model, sources, 4, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_Generate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Score)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hallucinate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TagCorpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
