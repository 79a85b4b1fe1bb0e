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

// Brute-force reference helpers shared by the unit and acceptance tests.
// Nothing here calls the library code it is used to check.

#ifndef MORPHBOOT_TESTS_ORACLES_HPP_
#define MORPHBOOT_TESTS_ORACLES_HPP_

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "morphboot/transducer.hpp"

namespace oracle {

using morphboot::Label;
using Str = std::vector<Label>;
using Relation = std::set<std::pair<Str, Str>>;

// All (input, output) pairs of `t` with |input| <= max_in, |output| <= max_out,
// found by exhaustive search over (state, input, output) configurations.
inline Relation relation(const morphboot::Transducer& t, std::size_t max_in, std::size_t max_out) {
  Relation rel;
  std::set<std::tuple<morphboot::StateId, Str, Str>> seen;
  std::vector<std::tuple<morphboot::StateId, Str, Str>> stack{{t.start(), {}, {}}};
  while (!stack.empty()) {
    auto [state, in, out] = stack.back();
    stack.pop_back();
    if (!seen.emplace(state, in, out).second) continue;
    if (t.is_final(state)) rel.emplace(in, out);
    for (const auto& arc : t.arcs(state)) {
      Str i2 = in, o2 = out;
      if (arc.in != morphboot::kEpsilon) i2.push_back(arc.in);
      if (arc.out != morphboot::kEpsilon) o2.push_back(arc.out);
      if (i2.size() > max_in || o2.size() > max_out) continue;
      stack.emplace_back(arc.target, std::move(i2), std::move(o2));
    }
  }
  return rel;
}

inline Relation restrict_relation(const Relation& r, std::size_t max_in, std::size_t max_out) {
  Relation out;
  for (const auto& [x, y] : r) {
    if (x.size() <= max_in && y.size() <= max_out) out.emplace(x, y);
  }
  return out;
}

inline Relation join(const Relation& a, const Relation& b) {
  std::multimap<Str, Str> by_input;
  for (const auto& [y, z] : b) by_input.emplace(y, z);
  Relation out;
  for (const auto& [x, y] : a) {
    auto [lo, hi] = by_input.equal_range(y);
    for (auto it = lo; it != hi; ++it) out.emplace(x, it->second);
  }
  return out;
}

inline Relation converse(const Relation& r) {
  Relation out;
  for (const auto& [x, y] : r) out.emplace(y, x);
  return out;
}

// Random transducer whose epsilon-bearing arcs go strictly forward (so any
// path has at most `states - 1` of them) plus non-epsilon self loops.
// Output length is therefore at most input length + states - 1.
inline morphboot::Transducer random_transducer(std::shared_ptr<const morphboot::SymbolTable> sym,
                                               int states, int alphabet, std::mt19937_64& rng) {
  morphboot::Transducer t(sym);
  for (int i = 0; i < states; ++i) t.add_state();
  t.set_start(0);
  std::uniform_int_distribution<int> label(0, alphabet);  // 0 is epsilon
  std::uniform_int_distribution<int> coin(0, 99);
  for (int i = 0; i < states; ++i) {
    if (coin(rng) < 35 || i == states - 1) t.set_final(i);
    for (int j = i + 1; j < states; ++j) {
      const int arcs = coin(rng) < 50 ? 1 : (coin(rng) < 40 ? 2 : 0);
      for (int k = 0; k < arcs; ++k) t.add_arc(i, label(rng), label(rng), j);
    }
    if (coin(rng) < 30) {
      std::uniform_int_distribution<int> sym_label(1, alphabet);
      t.add_arc(i, sym_label(rng), sym_label(rng), i);
    }
  }
  return t;
}

// All strings over labels 1..alphabet of length <= max_len.
inline std::vector<Str> all_strings(int alphabet, std::size_t max_len) {
  std::vector<Str> out{{}};
  std::vector<Str> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<Str> next;
    for (const Str& s : frontier) {
      for (int a = 1; a <= alphabet; ++a) {
        Str t = s;
        t.push_back(a);
        next.push_back(t);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// Mean log joint probability written out directly from its definition.
inline double mean_log_prob(const std::vector<std::string>& m,
                            const std::map<std::pair<std::string, std::string>, double>& p,
                            double floor_prob) {
  long double sum = 0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    const auto it = p.find({m[i], m[i + 1]});
    sum += std::log(static_cast<long double>(it == p.end() ? floor_prob : it->second));
  }
  return static_cast<double>(sum / static_cast<long double>(m.size() - 1));
}

}  // namespace oracle

#endif  // MORPHBOOT_TESTS_ORACLES_HPP_
