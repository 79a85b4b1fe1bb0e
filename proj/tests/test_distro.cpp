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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "morphboot/distro.hpp"
#include "morphboot/error.hpp"
#include "morphboot/grammar.hpp"
#include "morphboot/strings.hpp"
#include "support/oracles.hpp"

using namespace morphboot;
using Seq = std::vector<std::string>;

namespace {

const std::string kData = MORPHBOOT_DATA_DIR;

TrainingPair pair_of(const std::string& src, const std::string& tgt) {
  return TrainingPair{strings::split_ws(src), strings::split_ws(tgt)};
}

bool has_tag(const TrainingPair& p, const std::string& tag) {
  const auto tags = tag_sequence(p.target);
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

}  // namespace

TEST_CASE("tag_sequence inserts a single ROOT pseudo-tag") {
  CHECK(tag_sequence(strings::split_ws("[ V ] [ 1pl . incl . 3sg . PST ] [ GIN . bim ] b u [ PP ]")) ==
        Seq{"V", "1pl.incl.3sg.PST", "GIN.bim", "ROOT", "PP"});
  CHECK(tag_sequence(strings::split_ws("[ 3sg ] d a dj k e")) == Seq{"3sg", "ROOT"});
}

TEST_CASE("bigram estimation and scoring") {
  const std::vector<Seq> corpus{{"V", "ROOT", "PP"}, {"V", "ROOT", "X"}};
  const BigramTable t = estimate_bigrams(corpus);
  CHECK(t.total() == 4);
  CHECK(t.count("V", "ROOT") == 2);
  CHECK(t.prob("V", "ROOT") == doctest::Approx(0.5));
  CHECK(t.prob("ROOT", "PP") == doctest::Approx(0.25));
  CHECK(t.epsilon() == doctest::Approx(1.0 / 40));
  CHECK(score(Seq{"V", "ROOT", "PP"}, t) == doctest::Approx(-1.039721).epsilon(1e-6));
  CHECK(score(Seq{"PP", "V"}, t) == doctest::Approx(std::log(1.0 / 40)));
  CHECK_THROWS_AS(score(Seq{"V"}, t), EstimationError);
  CHECK_THROWS_AS(estimate_bigrams(std::vector<Seq>{{"V"}}), EstimationError);

  // Ten distinct bigrams, each p = 0.1.
  std::vector<Seq> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({"A" + std::to_string(i), "B"});
  CHECK(score(Seq{"A3", "B"}, estimate_bigrams(ten)) == doctest::Approx(std::log(0.1)));
}

TEST_CASE("score matches an independent mean-log-prob oracle") {
  std::mt19937_64 rng(17);
  const Seq tags{"A", "B", "C", "D", "ROOT"};
  std::uniform_int_distribution<std::size_t> pick(0, tags.size() - 1);
  std::uniform_int_distribution<std::size_t> len(2, 7);
  auto random_seq = [&] {
    Seq s(len(rng));
    for (auto& x : s) x = tags[pick(rng)];
    return s;
  };
  std::vector<Seq> corpus(40);
  for (auto& s : corpus) s = random_seq();
  const BigramTable t = estimate_bigrams(corpus);

  // Oracle probabilities counted from scratch.
  std::map<std::pair<std::string, std::string>, double> counts;
  double total = 0;
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      counts[{s[i], s[i + 1]}] += 1;
      total += 1;
    }
  }
  for (auto& [k, v] : counts) v /= total;
  for (int trial = 0; trial < 1000; ++trial) {
    const Seq m = random_seq();
    CHECK(score(m, t) == doctest::Approx(oracle::mean_log_prob(m, counts, 1 / (10 * total))).epsilon(1e-12));
  }
}

TEST_CASE("zipf weights and bucket bounds") {
  const auto w = zipf_weights(5, 1.0);
  CHECK(w[0] == doctest::Approx(0.4380).epsilon(1e-3));
  double sum = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += w[i];
    if (i) CHECK(w[i] < w[i - 1]);
  }
  CHECK(sum == doctest::Approx(1.0));
  for (double x : zipf_weights(4, 0.0)) CHECK(x == doctest::Approx(0.25));
  CHECK_THROWS_AS(zipf_weights(0, 1.0), ConfigError);

  const auto b = bucket_bounds(10, 3);
  CHECK(b == std::vector<std::pair<std::size_t, std::size_t>>{{0, 3}, {3, 6}, {6, 10}});
  for (std::size_t n : {0u, 1u, 9u, 101u}) {
    for (std::size_t k : {1u, 3u, 10u}) {
      const auto bb = bucket_bounds(n, k);
      CHECK(bb.front().first == 0);
      CHECK(bb.back().second == n);
      for (std::size_t i = 1; i < k; ++i) CHECK(bb[i].first == bb[i - 1].second);
      for (const auto& [lo, hi] : bb) CHECK(hi - lo <= n / k + 1);
    }
  }
}

TEST_CASE("resample draws buckets with Zipf frequencies") {
  // 1000 pairs with strictly decreasing scores: pair i has tag Ti, and the
  // table makes (Ti, ROOT) more probable for small i.
  BigramTable t;
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 1000; ++i) {
    const std::string tag = "T" + std::to_string(i);
    t.add(tag, kRootTag, 2000 - i);
    pairs.push_back(pair_of("a", "[ " + tag + " ] a"));
  }
  ResampleConfig cfg;
  cfg.k = 5;
  cfg.n = 100000;
  cfg.seed = 8;
  ResampleStats st;
  const auto out = resample(pairs, t, cfg, &st);
  CHECK(out.size() == 100000);
  const auto w = zipf_weights(5, 1.0);
  for (std::size_t b = 0; b < 5; ++b) {
    CHECK(st.bucket_sizes[b] == 200);
    CHECK(std::abs(st.bucket_draws[b] / 100000.0 - w[b]) < 0.01);
  }
  // Bucket 0 holds the 200 best-scored pairs: T0..T199.
  std::size_t top = 0;
  for (const auto& p : out) {
    const int i = std::stoi(tag_sequence(p.target)[0].substr(1));
    top += i < 200 ? 1 : 0;
  }
  CHECK(top == st.bucket_draws[0]);

  // Deterministic, and parallel scoring does not change the draw.
  ResampleConfig serial = cfg;
  serial.exec = Exec::kSerial;
  CHECK(resample(pairs, t, serial) == out);

  // n = 0 keeps the input size; s = 0 is uniform over buckets.
  cfg.n = 0;
  cfg.s = 0;
  CHECK(resample(pairs, t, cfg, &st).size() == 1000);
  cfg.k = 1;
  CHECK(resample(pairs, t, cfg).size() == 1000);

  // More buckets than pairs: empty buckets never get drawn.
  cfg.k = 10;
  cfg.s = 1;
  const std::vector<TrainingPair> few(pairs.begin(), pairs.begin() + 3);
  CHECK(resample(few, t, cfg, &st).size() == 3);
  CHECK(st.empty_buckets == 7);
  for (std::size_t b = 0; b < 10; ++b) {
    if (st.bucket_sizes[b] == 0) CHECK(st.bucket_draws[b] == 0);
  }
  cfg.k = 0;
  CHECK_THROWS_AS(resample(pairs, t, cfg), ConfigError);
}

TEST_CASE("resampling never lowers the mean score") {
  const GrammarSpec spec = load_grammar(kData + "/toylang.grammar");
  const CompiledGrammar g = compile_grammar(spec);
  const auto pairs = generate_pairs(g.analyzer, 3000, 2);
  // A skewed corpus: the first 100 generated words.
  std::vector<Seq> corpus;
  for (std::size_t i = 0; i < 100; ++i) corpus.push_back(tag_sequence(pairs[i].target));
  const BigramTable t = estimate_bigrams(corpus);
  auto mean = [&](const std::vector<TrainingPair>& v) {
    const auto s = score_pairs(v, t);
    double m = 0;
    for (double x : s) m += x;
    return m / static_cast<double>(s.size());
  };
  double prev = mean(pairs);
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    ResampleConfig cfg;
    cfg.s = s;
    cfg.seed = 3;
    const double m = mean(resample(pairs, t, cfg));
    CHECK(m > prev - 0.02);
    prev = m;
  }
}

TEST_CASE("tag_corpus analyses words and skips unknown ones") {
  const GrammarSpec spec = load_grammar(kData + "/kunwinjku.grammar");
  const CompiledGrammar g = compile_grammar(spec);
  const std::vector<Seq> words{graphemize(spec, "karribimbom"), graphemize(spec, "bikanjnguneng"),
                               graphemize(spec, "bobobo"), graphemize(spec, "buni")};
  TagCorpusStats st;
  const auto seqs = tag_corpus(g.analyzer, words, {}, &st);
  CHECK(st.words == 4);
  CHECK(st.analysed == 3);
  CHECK(st.sequences == seqs.size());
  CHECK(std::find(seqs.begin(), seqs.end(), Seq{"V", "1pl.incl.3sg.PST", "GIN.bim", "ROOT", "PP"}) !=
        seqs.end());
  const auto first = tag_corpus(g.analyzer, words, {true, Exec::kSerial}, &st);
  CHECK(first.size() == 3);
  // buni has two null-prefix analyses; both count.
  CHECK(seqs.size() == 4);
}

TEST_CASE("bigram table file round trip") {
  const BigramTable t = estimate_bigrams(std::vector<Seq>{{"V", "ROOT", "PP"}, {"V", "ROOT", "X"}});
  std::stringstream ss;
  t.write(ss);
  CHECK(ss.str().find("V\tROOT\t2\t0.5\n") != std::string::npos);
  const BigramTable back = BigramTable::read(ss);
  CHECK(back.counts() == t.counts());
  CHECK(back.total() == t.total());
  std::stringstream bad("a\tb\n");
  CHECK_THROWS_AS(BigramTable::read(bad), FormatError);
}

TEST_CASE("resampling rarefies a tag that is rare in the corpus") {
  const GrammarSpec spec = load_grammar(kData + "/toylang.grammar");
  const CompiledGrammar g = compile_grammar(spec);
  const auto pairs = generate_pairs(g.analyzer, 4000, 11);
  std::vector<Seq> corpus;
  std::size_t com_kept = 0;
  for (const auto& p : pairs) {
    if (has_tag(p, "COM") && com_kept++ >= 20) continue;  // keep COM rare
    corpus.push_back(tag_sequence(p.target));
  }
  const BigramTable t = estimate_bigrams(corpus);
  auto com_rate = [](const std::vector<TrainingPair>& v) {
    double n = 0;
    for (const auto& p : v) n += has_tag(p, "COM") ? 1 : 0;
    return n / static_cast<double>(v.size());
  };
  ResampleConfig cfg;
  cfg.seed = 4;
  const double before = com_rate(pairs);
  const double after = com_rate(resample(pairs, t, cfg));
  CAPTURE(before);
  CAPTURE(after);
  CHECK(after < 0.8 * before);
}
