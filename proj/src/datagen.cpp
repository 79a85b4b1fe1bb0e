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

#include "morphboot/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "morphboot/error.hpp"
#include "morphboot/strings.hpp"

namespace morphboot {

std::vector<std::string> tokenize_target(std::span<const std::string> analysis) {
  std::vector<std::string> out;
  for (const std::string& sym : analysis) {
    if (sym.empty()) throw TokenizationError("empty analysis symbol");
    if (sym.front() != '[' && sym.back() != ']') {
      out.push_back(sym);
      continue;
    }
    if (sym.size() < 3 || sym.front() != '[' || sym.back() != ']') {
      throw TokenizationError("malformed tag '" + sym + "'");
    }
    const auto parts = strings::split(std::string_view(sym).substr(1, sym.size() - 2), '.');
    out.emplace_back("[");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].empty() || parts[i].find_first_of("[]") != std::string::npos) {
        throw TokenizationError("malformed tag '" + sym + "'");
      }
      if (i) out.emplace_back(".");
      out.push_back(parts[i]);
    }
    out.emplace_back("]");
  }
  return out;
}

std::vector<std::string> detokenize_target(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != "[") {
      out.push_back(tokens[i]);
      continue;
    }
    std::string tag = "[";
    std::size_t j = i + 1;
    for (; j < tokens.size() && tokens[j] != "]"; ++j) tag += tokens[j];
    if (j == tokens.size()) throw TokenizationError("unbalanced '[' in target");
    out.push_back(tag + "]");
    i = j;
  }
  return out;
}

std::vector<std::string> target_tags(std::span<const std::string> tokens) {
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "]") throw TokenizationError("unbalanced ']' in target");
    if (tokens[i] != "[") continue;
    std::string tag;
    std::size_t j = i + 1;
    for (; j < tokens.size() && tokens[j] != "]"; ++j) {
      if (tokens[j] == "[") throw TokenizationError("nested '[' in target");
      tag += tokens[j];
    }
    if (j == tokens.size()) throw TokenizationError("unclosed '[' in target");
    if (tag.empty()) throw TokenizationError("empty tag in target");
    tags.push_back(std::move(tag));
    i = j;
  }
  return tags;
}

std::vector<TrainingPair> generate_pairs(const Transducer& analyzer, std::size_t n,
                                         std::uint64_t seed, const GenerateOptions& options,
                                         GenerateStats* stats) {
  std::vector<TrainingPair> raw(n);
  const SymbolTable& sym = analyzer.symbols();
  parallel_for(n, options.exec, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const PathSample s = fst::random_walk(analyzer, rng, options.max_length);
    raw[i].source = sym.decode(s.output);
    raw[i].target = tokenize_target(sym.decode(s.input));
  });
  std::set<TrainingPair> seen;
  std::vector<TrainingPair> out;
  for (auto& p : raw) {
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  if (stats) *stats = GenerateStats{n, out.size()};
  return out;
}

SplitSizes split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
  double sum = 0;
  for (double r : ratios) {
    if (!(r >= 0 && r <= 1)) throw ConfigError("split ratios must lie in [0, 1]");
    sum += r;
  }
  if (std::abs(sum - 1) > 1e-9) throw ConfigError("split ratios must sum to 1");
  // The epsilon keeps exact products such as 10 * 0.8 from flooring to 7.
  const auto slice = [n](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  };
  SplitSizes s;
  s.train = std::min(n, slice(ratios[0]));
  s.dev = std::min(n - s.train, slice(ratios[1]));
  s.test = n - s.train - s.dev;
  return s;
}

DatasetSplit split(std::span<const TrainingPair> pairs, const std::array<double, 3>& ratios,
                   std::uint64_t seed) {
  const SplitSizes sizes = split_sizes(pairs.size(), ratios);
  std::vector<TrainingPair> shuffled(pairs.begin(), pairs.end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  DatasetSplit out;
  auto it = std::make_move_iterator(shuffled.begin());
  out.train.assign(it, it + sizes.train);
  it += sizes.train;
  out.dev.assign(it, it + sizes.dev);
  it += sizes.dev;
  out.test.assign(it, std::make_move_iterator(shuffled.end()));
  return out;
}

std::string format_pair(const TrainingPair& pair) {
  return strings::join(pair.source, " ") + "\t" + strings::join(pair.target, " ");
}

TrainingPair parse_pair(const std::string& line) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
    throw FormatError("pair line needs exactly one tab: '" + line + "'");
  }
  TrainingPair p{strings::split_ws(std::string_view(line).substr(0, tab)),
                 strings::split_ws(std::string_view(line).substr(tab + 1))};
  if (p.source.empty() || p.target.empty()) throw FormatError("empty side in pair '" + line + "'");
  return p;
}

void write_pairs(std::ostream& os, std::span<const TrainingPair> pairs) {
  for (const auto& p : pairs) os << format_pair(p) << '\n';
}

std::vector<TrainingPair> read_pairs(std::istream& is) {
  std::vector<TrainingPair> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(parse_pair(line));
  }
  return out;
}

void save_pairs(const std::string& path, std::span<const TrainingPair> pairs) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  write_pairs(os, pairs);
  if (!os) throw ConfigError("write failed for '" + path + "'");
}

std::vector<TrainingPair> load_pairs(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return read_pairs(is);
}

}  // namespace morphboot
