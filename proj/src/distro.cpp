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

#include "morphboot/distro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "morphboot/error.hpp"
#include "morphboot/strings.hpp"

namespace morphboot {

std::vector<std::string> tag_sequence(std::span<const std::string> target_tokens) {
  std::vector<std::string> out;
  bool in_root = false;
  for (std::size_t i = 0; i < target_tokens.size(); ++i) {
    if (target_tokens[i] != "[") {
      if (!in_root) out.push_back(kRootTag);
      in_root = true;
      continue;
    }
    in_root = false;
    std::string tag;
    std::size_t j = i + 1;
    for (; j < target_tokens.size() && target_tokens[j] != "]"; ++j) tag += target_tokens[j];
    out.push_back(std::move(tag));
    i = j;
  }
  return out;
}

std::vector<std::vector<std::string>> tag_corpus(const Transducer& analyzer,
                                                 std::span<const std::vector<std::string>> words,
                                                 const TagCorpusOptions& options,
                                                 TagCorpusStats* stats) {
  std::vector<std::vector<std::vector<std::string>>> per_word(words.size());
  const SymbolTable& sym = analyzer.symbols();
  parallel_for(words.size(), options.exec, [&](std::size_t i) {
    auto analyses = fst::apply(analyzer, words[i], Direction::kUp);
    if (options.first_analysis_only && analyses.size() > 1) analyses.resize(1);
    for (const auto& a : analyses) {
      per_word[i].push_back(tag_sequence(tokenize_target(sym.decode(a))));
    }
  });
  std::vector<std::vector<std::string>> out;
  TagCorpusStats st;
  st.words = words.size();
  for (auto& seqs : per_word) {
    if (!seqs.empty()) ++st.analysed;
    for (auto& s : seqs) out.push_back(std::move(s));
  }
  st.sequences = out.size();
  if (stats) *stats = st;
  return out;
}

void BigramTable::add(const std::string& a, const std::string& b, std::uint64_t count) {
  counts_[{a, b}] += count;
  total_ += count;
}

std::uint64_t BigramTable::count(const std::string& a, const std::string& b) const {
  const auto it = counts_.find({a, b});
  return it == counts_.end() ? 0 : it->second;
}

double BigramTable::epsilon() const {
  if (total_ == 0) throw EstimationError("empty bigram table");
  return 1.0 / (10.0 * static_cast<double>(total_));
}

double BigramTable::prob(const std::string& a, const std::string& b) const {
  const std::uint64_t c = count(a, b);
  if (c == 0) return epsilon();
  return static_cast<double>(c) / static_cast<double>(total_);
}

void BigramTable::write(std::ostream& os) const {
  char buf[64];
  for (const auto& [key, c] : counts_) {
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(c) / static_cast<double>(total_));
    os << key.first << '\t' << key.second << '\t' << c << '\t' << buf << '\n';
  }
}

BigramTable BigramTable::read(std::istream& is) {
  BigramTable t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = strings::split(line, '\t');
    if (f.size() != 4) throw FormatError("bigram line needs 4 fields: '" + line + "'");
    try {
      t.add(f[0], f[1], std::stoull(f[2]));
    } catch (const std::invalid_argument&) {
      throw FormatError("bad count in bigram line '" + line + "'");
    }
  }
  return t;
}

BigramTable estimate_bigrams(std::span<const std::vector<std::string>> tag_sequences) {
  BigramTable t;
  for (const auto& seq : tag_sequences) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) t.add(seq[i], seq[i + 1]);
  }
  if (t.total() == 0) throw EstimationError("no adjacent tag pairs to estimate from");
  return t;
}

double score(std::span<const std::string> tags, const BigramTable& table) {
  if (tags.size() < 2) throw EstimationError("score undefined for fewer than two tags");
  double sum = 0;
  for (std::size_t i = 0; i + 1 < tags.size(); ++i) sum += std::log(table.prob(tags[i], tags[i + 1]));
  return sum / static_cast<double>(tags.size() - 1);
}

std::vector<double> score_pairs(std::span<const TrainingPair> pairs, const BigramTable& table,
                                Exec exec) {
  std::vector<double> out(pairs.size());
  parallel_for(pairs.size(), exec,
               [&](std::size_t i) { out[i] = score(tag_sequence(pairs[i].target), table); });
  return out;
}

std::vector<double> zipf_weights(std::size_t k, double s) {
  if (k == 0) throw ConfigError("zipf needs at least one bucket");
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
  const double h = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= h;
  return w;
}

std::vector<std::pair<std::size_t, std::size_t>> bucket_bounds(std::size_t n, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> out(k);
  for (std::size_t b = 0; b < k; ++b) out[b] = {b * n / k, (b + 1) * n / k};
  return out;
}

std::vector<TrainingPair> resample(std::span<const TrainingPair> pairs, const BigramTable& table,
                                   const ResampleConfig& config, ResampleStats* stats) {
  if (pairs.empty()) throw EstimationError("nothing to resample");
  if (config.k == 0) throw ConfigError("resample needs k >= 1");
  const std::vector<double> scores = score_pairs(pairs, table, config.exec);
  std::vector<std::size_t> rank(pairs.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const auto bounds = bucket_bounds(pairs.size(), config.k);
  std::vector<double> w = zipf_weights(config.k, config.s);
  ResampleStats st;
  for (std::size_t b = 0; b < config.k; ++b) {
    st.bucket_sizes.push_back(bounds[b].second - bounds[b].first);
    if (st.bucket_sizes.back() == 0) {
      w[b] = 0;  // discrete_distribution renormalises the rest
      ++st.empty_buckets;
    }
  }
  st.bucket_draws.assign(config.k, 0);

  const std::size_t n = config.n == 0 ? pairs.size() : config.n;
  std::mt19937_64 rng(config.seed);
  std::discrete_distribution<std::size_t> pick_bucket(w.begin(), w.end());
  std::vector<TrainingPair> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t b = pick_bucket(rng);
    std::uniform_int_distribution<std::size_t> pick(bounds[b].first, bounds[b].second - 1);
    out.push_back(pairs[rank[pick(rng)]]);
    ++st.bucket_draws[b];
  }
  if (stats) *stats = std::move(st);
  return out;
}

}  // namespace morphboot
