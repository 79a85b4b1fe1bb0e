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

#ifndef MORPHBOOT_SYMBOL_TABLE_HPP_
#define MORPHBOOT_SYMBOL_TABLE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace morphboot {

using Label = std::int32_t;
inline constexpr Label kEpsilon = 0;

// Interns the symbols shared by all transducers of one grammar. Index 0 is
// reserved for epsilon and never names a user symbol.
class SymbolTable {
 public:
  static constexpr std::string_view kEpsilonName = "<eps>";

  SymbolTable();

  // Returns the id of `symbol`, interning it if needed. Symbols must be
  // non-empty, contain no whitespace and must not spell epsilon.
  Label add(std::string_view symbol);

  std::optional<Label> find(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return find(symbol).has_value(); }

  const std::string& symbol(Label id) const;
  std::size_t size() const { return symbols_.size(); }

  // Maps a symbol sequence to ids; nullopt when any symbol is unknown.
  std::optional<std::vector<Label>> encode(std::span<const std::string> symbols) const;
  std::vector<std::string> decode(std::span<const Label> ids) const;
  std::string join(std::span<const Label> ids, std::string_view sep = "") const;

  bool operator==(const SymbolTable& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Label> index_;
};

}  // namespace morphboot

#endif  // MORPHBOOT_SYMBOL_TABLE_HPP_
