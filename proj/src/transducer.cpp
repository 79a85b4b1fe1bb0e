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

#include "morphboot/transducer.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "morphboot/error.hpp"

namespace morphboot {

Transducer::Transducer(std::shared_ptr<const SymbolTable> symbols) : symbols_(std::move(symbols)) {
  if (!symbols_) throw ConfigError("transducer needs a symbol table");
}

StateId Transducer::add_state() {
  arcs_.emplace_back();
  finals_.push_back(false);
  return static_cast<StateId>(arcs_.size() - 1);
}

void Transducer::check_state(StateId state) const {
  if (state < 0 || static_cast<std::size_t>(state) >= arcs_.size()) {
    throw ConfigError("invalid state id " + std::to_string(state));
  }
}

void Transducer::set_start(StateId state) {
  check_state(state);
  start_ = state;
}

void Transducer::set_final(StateId state, bool is_final) {
  check_state(state);
  finals_[state] = is_final;
}

void Transducer::add_arc(StateId source, Arc arc) {
  check_state(source);
  check_state(arc.target);
  const auto n = static_cast<Label>(symbols_->size());
  if (arc.in < 0 || arc.in >= n || arc.out < 0 || arc.out >= n) {
    throw ConfigError("arc label outside symbol table");
  }
  arcs_[source].push_back(arc);
}

std::size_t Transducer::num_arcs() const {
  std::size_t n = 0;
  for (const auto& a : arcs_) n += a.size();
  return n;
}

std::vector<StateId> Transducer::finals() const {
  std::vector<StateId> out;
  for (std::size_t s = 0; s < finals_.size(); ++s) {
    if (finals_[s]) out.push_back(static_cast<StateId>(s));
  }
  return out;
}

bool Transducer::operator==(const Transducer& other) const {
  return *symbols_ == *other.symbols_ && start_ == other.start_ && arcs_ == other.arcs_ &&
         finals_ == other.finals_;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace fst {
namespace {

bool same_symbols(const Transducer& a, const Transducer& b) {
  return a.symbols_ptr() == b.symbols_ptr() || a.symbols() == b.symbols();
}

// Collects every label string of an acyclic transducer on one tape.
void enumerate_tape(const Transducer& t, StateId state, bool input_side, std::vector<Label>& prefix,
                    std::set<std::vector<Label>>& out) {
  if (t.is_final(state)) out.insert(prefix);
  for (const Arc& arc : t.arcs(state)) {
    const Label l = input_side ? arc.in : arc.out;
    if (l != kEpsilon) prefix.push_back(l);
    enumerate_tape(t, arc.target, input_side, prefix, out);
    if (l != kEpsilon) prefix.pop_back();
  }
}

}  // namespace

Transducer linear(std::shared_ptr<const SymbolTable> symbols, std::span<const Label> labels) {
  Transducer t(std::move(symbols));
  StateId s = t.add_state();
  t.set_start(s);
  for (Label l : labels) {
    StateId next = t.add_state();
    t.add_arc(s, l, l, next);
    s = next;
  }
  t.set_final(s);
  return t;
}

Transducer trim(const Transducer& t) {
  const std::size_t n = t.num_states();
  std::vector<bool> access(n, false), coaccess(n, false);
  std::vector<std::vector<StateId>> reverse(n);
  {
    std::vector<StateId> stack{t.start()};
    access[t.start()] = true;
    while (!stack.empty()) {
      StateId s = stack.back();
      stack.pop_back();
      for (const Arc& arc : t.arcs(s)) {
        if (!access[arc.target]) {
          access[arc.target] = true;
          stack.push_back(arc.target);
        }
      }
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    for (const Arc& arc : t.arcs(static_cast<StateId>(s))) {
      reverse[arc.target].push_back(static_cast<StateId>(s));
    }
  }
  {
    std::vector<StateId> stack;
    for (StateId f : t.finals()) {
      coaccess[f] = true;
      stack.push_back(f);
    }
    while (!stack.empty()) {
      StateId s = stack.back();
      stack.pop_back();
      for (StateId p : reverse[s]) {
        if (!coaccess[p]) {
          coaccess[p] = true;
          stack.push_back(p);
        }
      }
    }
  }

  Transducer out(t.symbols_ptr());
  if (!(access[t.start()] && coaccess[t.start()])) {
    out.set_start(out.add_state());
    return out;
  }
  std::vector<StateId> remap(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (access[s] && coaccess[s]) remap[s] = out.add_state();
  }
  out.set_start(remap[t.start()]);
  for (std::size_t s = 0; s < n; ++s) {
    if (remap[s] < 0) continue;
    if (t.is_final(static_cast<StateId>(s))) out.set_final(remap[s]);
    for (const Arc& arc : t.arcs(static_cast<StateId>(s))) {
      if (remap[arc.target] >= 0) out.add_arc(remap[s], arc.in, arc.out, remap[arc.target]);
    }
  }
  return out;
}

Transducer compose(const Transducer& a, const Transducer& b) {
  if (!same_symbols(a, b)) throw ConfigError("compose: transducers use different symbol tables");

  // Filter state 0: no input-epsilon move of b since the last match.
  // Filter state 1: at least one; output-epsilon moves of a are now blocked.
  struct Triple {
    StateId qa, qb;
    int filter;
  };
  Transducer out(a.symbols_ptr());
  std::unordered_map<std::uint64_t, StateId> ids;
  std::deque<std::pair<Triple, StateId>> queue;

  auto get = [&](StateId qa, StateId qb, int filter) {
    const std::uint64_t key = (static_cast<std::uint64_t>(qa) << 32) |
                              (static_cast<std::uint64_t>(qb) << 1) |
                              static_cast<std::uint64_t>(filter);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    StateId id = out.add_state();
    if (a.is_final(qa) && b.is_final(qb)) out.set_final(id);
    ids.emplace(key, id);
    queue.emplace_back(Triple{qa, qb, filter}, id);
    return id;
  };

  out.set_start(get(a.start(), b.start(), 0));
  while (!queue.empty()) {
    auto [triple, id] = queue.front();
    queue.pop_front();
    const auto b_arcs = b.arcs(triple.qb);
    for (const Arc& x : a.arcs(triple.qa)) {
      if (x.out == kEpsilon) {
        if (triple.filter == 0) out.add_arc(id, x.in, kEpsilon, get(x.target, triple.qb, 0));
        continue;
      }
      for (const Arc& y : b_arcs) {
        if (y.in == x.out) out.add_arc(id, x.in, y.out, get(x.target, y.target, 0));
      }
    }
    for (const Arc& y : b_arcs) {
      if (y.in == kEpsilon) out.add_arc(id, kEpsilon, y.out, get(triple.qa, y.target, 1));
    }
  }
  return trim(out);
}

Transducer invert(const Transducer& t) {
  Transducer out(t.symbols_ptr());
  for (std::size_t s = 0; s < t.num_states(); ++s) out.add_state();
  out.set_start(t.start());
  for (std::size_t s = 0; s < t.num_states(); ++s) {
    const auto state = static_cast<StateId>(s);
    if (t.is_final(state)) out.set_final(state);
    for (const Arc& arc : t.arcs(state)) out.add_arc(state, arc.out, arc.in, arc.target);
  }
  return out;
}

std::vector<std::vector<Label>> apply(const Transducer& t, std::span<const Label> s,
                                      Direction direction) {
  const Transducer chain = linear(t.symbols_ptr(), s);
  const Transducer joined =
      direction == Direction::kDown ? compose(chain, t) : compose(t, chain);
  if (joined.num_arcs() == 0 && !joined.is_final(joined.start())) return {};
  if (!is_acyclic(joined)) {
    throw UnsupportedStructureError("apply: infinitely many results");
  }
  std::set<std::vector<Label>> found;
  std::vector<Label> prefix;
  enumerate_tape(joined, joined.start(), direction == Direction::kUp, prefix, found);
  return {found.begin(), found.end()};
}

std::vector<std::vector<Label>> apply(const Transducer& t, std::span<const std::string> s,
                                      Direction direction) {
  auto ids = t.symbols().encode(s);
  if (!ids) return {};
  return apply(t, *ids, direction);
}

bool is_acyclic(const Transducer& t) {
  const std::size_t n = t.num_states();
  std::vector<int> indegree(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (const Arc& arc : t.arcs(static_cast<StateId>(s))) ++indegree[arc.target];
  }
  std::vector<StateId> ready;
  for (std::size_t s = 0; s < n; ++s) {
    if (indegree[s] == 0) ready.push_back(static_cast<StateId>(s));
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    StateId s = ready.back();
    ready.pop_back();
    ++seen;
    for (const Arc& arc : t.arcs(s)) {
      if (--indegree[arc.target] == 0) ready.push_back(arc.target);
    }
  }
  return seen == n;
}

BigCount count_paths(const Transducer& t) {
  const Transducer trimmed = trim(t);
  const std::size_t n = trimmed.num_states();
  std::vector<int> indegree(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (const Arc& arc : trimmed.arcs(static_cast<StateId>(s))) ++indegree[arc.target];
  }
  std::vector<StateId> order, ready;
  for (std::size_t s = 0; s < n; ++s) {
    if (indegree[s] == 0) ready.push_back(static_cast<StateId>(s));
  }
  while (!ready.empty()) {
    StateId s = ready.back();
    ready.pop_back();
    order.push_back(s);
    for (const Arc& arc : trimmed.arcs(s)) {
      if (--indegree[arc.target] == 0) ready.push_back(arc.target);
    }
  }
  if (order.size() != n) throw UnsupportedStructureError("count_paths: transducer has a cycle");

  std::vector<BigCount> paths(n);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    BigCount total = trimmed.is_final(*it) ? 1 : 0;
    for (const Arc& arc : trimmed.arcs(*it)) total += paths[arc.target];
    paths[*it] = std::move(total);
  }
  return paths[trimmed.start()];
}

PathSample random_walk(const Transducer& t, std::mt19937_64& rng, std::size_t max_length) {
  for (int attempt = 0; attempt < kWalkRetries; ++attempt) {
    PathSample sample;
    StateId state = t.start();
    std::size_t steps = 0;
    bool accepted = false;
    for (;;) {
      const auto arcs = t.arcs(state);
      const std::size_t options = arcs.size() + (t.is_final(state) ? 1 : 0);
      if (options == 0) break;
      const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, options - 1)(rng);
      if (pick == arcs.size()) {
        accepted = true;
        break;
      }
      if (++steps > max_length) break;
      const Arc& arc = arcs[pick];
      if (arc.in != kEpsilon) sample.input.push_back(arc.in);
      if (arc.out != kEpsilon) sample.output.push_back(arc.out);
      state = arc.target;
    }
    if (accepted) return sample;
  }
  throw GenerationError("random_walk: no accepting path within " + std::to_string(max_length) +
                        " arcs after " + std::to_string(kWalkRetries) + " attempts");
}

namespace {
constexpr std::string_view kMagic = "morphboot-fst";
constexpr int kVersion = 1;

std::string next_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(std::string("fst text: missing ") + what);
  return line;
}

std::size_t header_count(std::istream& is, std::string_view key) {
  const std::string line = next_line(is, key.data());
  const auto tab = line.find('\t');
  if (tab == std::string::npos || line.substr(0, tab) != key) {
    throw FormatError("fst text: expected '" + std::string(key) + "', got '" + line + "'");
  }
  try {
    return std::stoull(line.substr(tab + 1));
  } catch (const std::exception&) {
    throw FormatError("fst text: bad count in '" + line + "'");
  }
}

std::vector<long long> split_numbers(const std::string& line, std::size_t expected) {
  std::vector<long long> out;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, '\t')) {
    try {
      out.push_back(std::stoll(field));
    } catch (const std::exception&) {
      throw FormatError("fst text: bad number in '" + line + "'");
    }
  }
  if (out.size() != expected) throw FormatError("fst text: malformed line '" + line + "'");
  return out;
}
}  // namespace

void write_text(const Transducer& t, std::ostream& os) {
  const SymbolTable& sym = t.symbols();
  os << kMagic << '\t' << kVersion << '\n';
  os << "symbols\t" << sym.size() - 1 << '\n';
  for (std::size_t i = 1; i < sym.size(); ++i) os << i << '\t' << sym.symbol(static_cast<Label>(i)) << '\n';
  os << "states\t" << t.num_states() << '\n';
  os << "start\t" << t.start() << '\n';
  const auto finals = t.finals();
  os << "finals\t" << finals.size() << '\n';
  for (StateId f : finals) os << f << '\n';
  os << "arcs\t" << t.num_arcs() << '\n';
  for (std::size_t s = 0; s < t.num_states(); ++s) {
    for (const Arc& arc : t.arcs(static_cast<StateId>(s))) {
      os << s << '\t' << arc.in << '\t' << arc.out << '\t' << arc.target << '\n';
    }
  }
}

std::string to_text(const Transducer& t) {
  std::ostringstream os;
  write_text(t, os);
  return os.str();
}

Transducer read_text(std::istream& is) {
  const std::string magic = next_line(is, "header");
  if (magic != std::string(kMagic) + "\t" + std::to_string(kVersion)) {
    throw FormatError("fst text: unsupported header '" + magic + "'");
  }
  auto symbols = std::make_shared<SymbolTable>();
  const std::size_t num_symbols = header_count(is, "symbols");
  for (std::size_t i = 1; i <= num_symbols; ++i) {
    const std::string line = next_line(is, "symbol");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("fst text: malformed symbol line '" + line + "'");
    if (line.substr(0, tab) != std::to_string(i)) throw FormatError("fst text: symbol ids out of order");
    symbols->add(line.substr(tab + 1));
    if (symbols->size() != i + 1) throw FormatError("fst text: duplicate symbol '" + line + "'");
  }
  Transducer t(symbols);
  const std::size_t num_states = header_count(is, "states");
  for (std::size_t i = 0; i < num_states; ++i) t.add_state();
  if (num_states == 0) throw FormatError("fst text: no states");
  const std::size_t start = header_count(is, "start");
  t.set_start(static_cast<StateId>(start));
  const std::size_t num_finals = header_count(is, "finals");
  for (std::size_t i = 0; i < num_finals; ++i) {
    auto v = split_numbers(next_line(is, "final"), 1);
    t.set_final(static_cast<StateId>(v[0]));
  }
  const std::size_t num_arcs = header_count(is, "arcs");
  for (std::size_t i = 0; i < num_arcs; ++i) {
    auto v = split_numbers(next_line(is, "arc"), 4);
    t.add_arc(static_cast<StateId>(v[0]), static_cast<Label>(v[1]), static_cast<Label>(v[2]),
              static_cast<StateId>(v[3]));
  }
  return t;
}

Transducer from_text(const std::string& text) {
  std::istringstream is(text);
  return read_text(is);
}

}  // namespace fst
}  // namespace morphboot
