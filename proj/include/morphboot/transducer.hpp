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

// Unweighted finite-state transducers over a shared symbol table.
//
// A Transducer is built once (add_state/add_arc) and then treated as an
// immutable value; every algorithm below returns a fresh transducer. All
// algorithms are free of hidden state and safe to call concurrently on the
// same input.

#ifndef MORPHBOOT_TRANSDUCER_HPP_
#define MORPHBOOT_TRANSDUCER_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "morphboot/symbol_table.hpp"

namespace morphboot {

using StateId = std::int32_t;

struct Arc {
  Label in = kEpsilon;
  Label out = kEpsilon;
  StateId target = 0;

  bool operator==(const Arc&) const = default;
};

class Transducer {
 public:
  explicit Transducer(std::shared_ptr<const SymbolTable> symbols);

  StateId add_state();
  void set_start(StateId state);
  void set_final(StateId state, bool is_final = true);
  void add_arc(StateId source, Arc arc);
  void add_arc(StateId source, Label in, Label out, StateId target) {
    add_arc(source, Arc{in, out, target});
  }

  StateId start() const { return start_; }
  std::size_t num_states() const { return arcs_.size(); }
  std::size_t num_arcs() const;
  bool is_final(StateId state) const { return finals_[state]; }
  std::vector<StateId> finals() const;
  std::span<const Arc> arcs(StateId state) const { return arcs_[state]; }

  const SymbolTable& symbols() const { return *symbols_; }
  const std::shared_ptr<const SymbolTable>& symbols_ptr() const { return symbols_; }

  bool operator==(const Transducer& other) const;

 private:
  void check_state(StateId state) const;

  std::shared_ptr<const SymbolTable> symbols_;
  StateId start_ = 0;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<bool> finals_;
};

enum class Direction { kDown, kUp };

// A label sequence pair read off one accepting path, epsilons removed.
struct PathSample {
  std::vector<Label> input;
  std::vector<Label> output;

  bool operator==(const PathSample&) const = default;
  auto operator<=>(const PathSample&) const = default;
};

using BigCount = boost::multiprecision::cpp_int;

namespace fst {

inline constexpr int kWalkRetries = 100;

// Transducer accepting exactly `labels` on both tapes.
Transducer linear(std::shared_ptr<const SymbolTable> symbols, std::span<const Label> labels);

// Removes states unreachable from start or unable to reach a final state.
// Surviving states keep their relative order.
Transducer trim(const Transducer& t);

// Relational composition a∘b (x→z iff a: x→y and b: y→z), trimmed. Epsilon
// moves are canonicalised so every pair of matching paths yields exactly one
// composed path: between two real matches all output-epsilon moves of `a`
// precede all input-epsilon moves of `b`. Throws ConfigError when the
// symbol tables differ.
Transducer compose(const Transducer& a, const Transducer& b);

Transducer invert(const Transducer& t);

// kDown: all outputs z with s→z. kUp: all inputs x with x→s. Sorted
// lexicographically by label id and deduplicated. An empty result is the
// no-analysis signal. Throws UnsupportedStructureError when the result is
// infinite.
std::vector<std::vector<Label>> apply(const Transducer& t, std::span<const Label> s,
                                      Direction direction);

// String convenience: symbols separated by nothing, looked up as given tokens.
// Unknown symbols yield an empty result.
std::vector<std::vector<Label>> apply(const Transducer& t, std::span<const std::string> s,
                                      Direction direction);

bool is_acyclic(const Transducer& t);

// Number of accepting paths of an acyclic transducer. Throws
// UnsupportedStructureError on cycles in the trimmed transducer.
BigCount count_paths(const Transducer& t);

// One start-to-final walk choosing uniformly among the outgoing arcs plus a
// stop option at final states. Dead ends and walks longer than `max_length`
// arcs are retried up to kWalkRetries times, then GenerationError.
PathSample random_walk(const Transducer& t, std::mt19937_64& rng, std::size_t max_length);

// Versioned line-oriented text format; write(read(x)) reproduces x exactly.
void write_text(const Transducer& t, std::ostream& os);
std::string to_text(const Transducer& t);
Transducer read_text(std::istream& is);
Transducer from_text(const std::string& text);

}  // namespace fst

// Deterministic per-item seed derivation (splitmix64 over seed and index), so
// that serial and parallel generation consume identical streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace morphboot

#endif  // MORPHBOOT_TRANSDUCER_HPP_
