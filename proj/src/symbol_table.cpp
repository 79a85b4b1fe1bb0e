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

#include "morphboot/symbol_table.hpp"

#include <algorithm>

#include "morphboot/error.hpp"

namespace morphboot {

SymbolTable::SymbolTable() {
  symbols_.emplace_back(kEpsilonName);
  index_.emplace(std::string(kEpsilonName), kEpsilon);
}

Label SymbolTable::add(std::string_view symbol) {
  if (symbol.empty()) throw ConfigError("empty symbol");
  if (symbol == kEpsilonName) throw ConfigError("epsilon is reserved");
  if (std::any_of(symbol.begin(), symbol.end(),
                  [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; })) {
    throw ConfigError("symbol contains whitespace: '" + std::string(symbol) + "'");
  }
  auto it = index_.find(std::string(symbol));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<Label>(symbols_.size());
  symbols_.emplace_back(symbol);
  index_.emplace(std::string(symbol), id);
  return id;
}

std::optional<Label> SymbolTable::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end() || it->second == kEpsilon) return std::nullopt;
  return it->second;
}

const std::string& SymbolTable::symbol(Label id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw ConfigError("label out of range: " + std::to_string(id));
  }
  return symbols_[id];
}

std::optional<std::vector<Label>> SymbolTable::encode(std::span<const std::string> symbols) const {
  std::vector<Label> ids;
  ids.reserve(symbols.size());
  for (const auto& s : symbols) {
    auto id = find(s);
    if (!id) return std::nullopt;
    ids.push_back(*id);
  }
  return ids;
}

std::vector<std::string> SymbolTable::decode(std::span<const Label> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (Label id : ids) out.push_back(symbol(id));
  return out;
}

std::string SymbolTable::join(std::span<const Label> ids, std::string_view sep) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += sep;
    out += symbol(ids[i]);
  }
  return out;
}

}  // namespace morphboot
