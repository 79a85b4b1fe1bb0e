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

#include "morphboot/rewrite.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "morphboot/error.hpp"

namespace morphboot {
namespace {

std::string join_side(const std::vector<std::string>& side) {
  if (side.empty()) return "0";
  std::string out;
  for (const auto& s : side) out += s;
  return out;
}

bool equal_at(std::span<const std::string> s, std::size_t pos, const std::vector<std::string>& what) {
  if (pos + what.size() > s.size()) return false;
  return std::equal(what.begin(), what.end(), s.begin() + static_cast<std::ptrdiff_t>(pos));
}

// KMP automaton over the left context, tracking the longest suffix of the
// consumed input that is a prefix of the context.
class ContextMatcher {
 public:
  explicit ContextMatcher(std::vector<Label> pattern) : pattern_(std::move(pattern)) {
    fail_.assign(pattern_.size(), 0);
    for (std::size_t i = 1, k = 0; i < pattern_.size(); ++i) {
      while (k > 0 && pattern_[i] != pattern_[k]) k = fail_[k - 1];
      if (pattern_[i] == pattern_[k]) ++k;
      fail_[i] = k;
    }
  }

  std::size_t full() const { return pattern_.size(); }

  std::size_t next(std::size_t state, Label x) const {
    if (pattern_.empty()) return 0;
    if (state == pattern_.size()) state = fail_[state - 1];
    while (state > 0 && pattern_[state] != x) state = fail_[state - 1];
    if (pattern_[state] == x) ++state;
    return state;
  }

 private:
  std::vector<Label> pattern_;
  std::vector<std::size_t> fail_;
};

std::vector<Label> lookup(const SymbolTable& table, const std::vector<std::string>& side,
                          const RewriteRule& rule) {
  std::vector<Label> ids;
  for (const auto& s : side) {
    auto id = table.find(s);
    if (!id) throw ConfigError("rule '" + rule.to_string() + "': unknown symbol '" + s + "'");
    ids.push_back(*id);
  }
  return ids;
}

}  // namespace

void RewriteRule::validate() const {
  if (lhs.empty()) throw ValidationError("rewrite rule with empty lhs");
  if (lhs == rhs && left.empty() && right.empty()) {
    throw ValidationError("rewrite rule '" + to_string() + "' is an identity");
  }
}

std::string RewriteRule::to_string() const {
  std::string out = join_side(lhs) + " -> " + join_side(rhs);
  if (!left.empty() || !right.empty()) {
    out += " / ";
    for (const auto& s : left) out += s;
    out += " _ ";
    for (const auto& s : right) out += s;
  }
  return out;
}

std::vector<std::string> oracle_rewrite(const RewriteRule& rule, std::span<const std::string> s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool fires = i >= rule.left.size() && equal_at(s, i - rule.left.size(), rule.left) &&
                       equal_at(s, i, rule.lhs) && equal_at(s, i + rule.lhs.size(), rule.right);
    if (fires) {
      out.insert(out.end(), rule.rhs.begin(), rule.rhs.end());
      i += rule.lhs.size();
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

Transducer compile_rule(const RewriteRule& rule, std::shared_ptr<const SymbolTable> symbols,
                        std::span<const Label> sigma) {
  rule.validate();
  const SymbolTable& table = *symbols;
  const std::vector<Label> lhs = lookup(table, rule.lhs, rule);
  const std::vector<Label> rhs = lookup(table, rule.rhs, rule);
  const std::vector<Label> left = lookup(table, rule.left, rule);
  const std::vector<Label> right = lookup(table, rule.right, rule);

  std::set<Label> alphabet(sigma.begin(), sigma.end());
  alphabet.erase(kEpsilon);
  for (const auto* side : {&lhs, &left, &right}) {
    for (Label l : *side) {
      if (!alphabet.count(l)) {
        throw ConfigError("rule '" + rule.to_string() + "': symbol '" + table.symbol(l) +
                          "' outside the rule alphabet");
      }
    }
  }

  // The window that must be seen before deciding to fire: lhs then right.
  std::vector<Label> window = lhs;
  window.insert(window.end(), right.begin(), right.end());
  const ContextMatcher context(left);

  // A configuration is (context state, pending length). Pending input is
  // only held back while it is a proper prefix of the window and the left
  // context matches at its start, so its content is window[0, pending).
  using Config = std::pair<std::size_t, std::size_t>;
  struct Step {
    std::vector<Label> emitted;
    Config next;
  };
  auto advance = [&](Config config, Label x) {
    std::size_t ctx = config.first;
    std::deque<Label> buffer(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(config.second));
    buffer.push_back(x);
    Step step;
    while (!buffer.empty()) {
      bool consistent = ctx == context.full();
      const std::size_t n = std::min(buffer.size(), window.size());
      for (std::size_t i = 0; consistent && i < n; ++i) consistent = buffer[i] == window[i];
      if (consistent && buffer.size() >= window.size()) {
        step.emitted.insert(step.emitted.end(), rhs.begin(), rhs.end());
        for (std::size_t i = 0; i < lhs.size(); ++i) {
          ctx = context.next(ctx, buffer.front());
          buffer.pop_front();
        }
      } else if (consistent) {
        break;
      } else {
        step.emitted.push_back(buffer.front());
        ctx = context.next(ctx, buffer.front());
        buffer.pop_front();
      }
    }
    step.next = {ctx, buffer.size()};
    return step;
  };

  Transducer t(symbols);
  std::map<Config, StateId> ids;
  std::deque<Config> queue;
  auto state_of = [&](Config c) {
    auto it = ids.find(c);
    if (it != ids.end()) return it->second;
    StateId id = t.add_state();
    ids.emplace(c, id);
    queue.push_back(c);
    return id;
  };
  auto add_chain = [&](StateId from, Label in, const std::vector<Label>& out, StateId to) {
    if (out.size() <= 1) {
      t.add_arc(from, in, out.empty() ? kEpsilon : out[0], to);
      return;
    }
    StateId cur = from;
    for (std::size_t i = 0; i < out.size(); ++i) {
      StateId next = i + 1 == out.size() ? to : t.add_state();
      t.add_arc(cur, i == 0 ? in : kEpsilon, out[i], next);
      cur = next;
    }
  };

  t.set_start(state_of({0, 0}));
  StateId sink = -1;
  while (!queue.empty()) {
    const Config c = queue.front();
    queue.pop_front();
    const StateId from = ids.at(c);
    for (Label x : alphabet) {
      Step step = advance(c, x);
      add_chain(from, x, step.emitted, state_of(step.next));
    }
    if (c.second == 0) {
      t.set_final(from);
    } else {
      if (sink < 0) {
        sink = t.add_state();
        t.set_final(sink);
      }
      std::vector<Label> flush(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(c.second));
      add_chain(from, kEpsilon, flush, sink);
    }
  }
  return t;
}

Transducer compile_rule(const RewriteRule& rule, std::shared_ptr<const SymbolTable> symbols) {
  std::vector<Label> sigma;
  for (std::size_t i = 1; i < symbols->size(); ++i) sigma.push_back(static_cast<Label>(i));
  return compile_rule(rule, std::move(symbols), sigma);
}

Transducer compose_cascade(std::span<const RewriteRule> rules, const Transducer& morphotactic) {
  Transducer current = morphotactic;
  for (const RewriteRule& rule : rules) {
    std::set<Label> sigma;
    for (std::size_t s = 0; s < current.num_states(); ++s) {
      for (const Arc& arc : current.arcs(static_cast<StateId>(s))) {
        if (arc.out != kEpsilon) sigma.insert(arc.out);
      }
    }
    for (const auto* side : {&rule.lhs, &rule.left, &rule.right}) {
      for (Label l : lookup(current.symbols(), *side, rule)) sigma.insert(l);
    }
    const std::vector<Label> alphabet(sigma.begin(), sigma.end());
    current = fst::compose(current, compile_rule(rule, current.symbols_ptr(), alphabet));
  }
  return current;
}

}  // namespace morphboot
