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

#include "morphboot/grammar.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "morphboot/error.hpp"
#include "morphboot/strings.hpp"

namespace morphboot {
namespace {

constexpr std::string_view kHeader = "morphboot-grammar";
constexpr int kMinSlot = -12;
constexpr int kMaxSlot = 2;

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw ValidationError("grammar line " + std::to_string(line_no) + ": " + what);
}

bool is_empty_side(std::string_view s) { return s.empty() || s == "0" || s == "∅"; }

std::vector<std::string> segment_side(const Graphemizer& g, std::string_view s) {
  s = strings::trim(s);
  if (is_empty_side(s)) return {};
  std::string compact;
  for (char c : s) {
    if (c != ' ' && c != '\t') compact += c;
  }
  return g.segment(compact);
}

// Rule text after the `rule` keyword: lhs -> rhs [/ left _ right].
RewriteRule parse_rule(const Graphemizer& g, std::string_view text, int line_no) {
  const auto arrow = text.find("->");
  if (arrow == std::string_view::npos) parse_fail(line_no, "rule without '->'");
  RewriteRule rule;
  rule.lhs = segment_side(g, text.substr(0, arrow));
  std::string_view rest = text.substr(arrow + 2);
  const auto slash = rest.find('/');
  rule.rhs = segment_side(g, rest.substr(0, slash));
  if (slash != std::string_view::npos) {
    const std::string_view ctx = rest.substr(slash + 1);
    const auto underscore = ctx.find('_');
    if (underscore == std::string_view::npos) parse_fail(line_no, "rule context without '_'");
    rule.left = segment_side(g, ctx.substr(0, underscore));
    rule.right = segment_side(g, ctx.substr(underscore + 1));
  }
  rule.validate();
  return rule;
}

ReduplicationTemplate parse_redup(const std::vector<std::string>& words, const Graphemizer& g,
                                  int line_no) {
  // redup <type> <pattern> <mutation> [whole] [context <graphemes>]
  if (words.size() < 4) parse_fail(line_no, "redup needs type, pattern and mutation");
  ReduplicationTemplate tpl;
  tpl.type = parse_redup_type(words[1]);
  tpl.pattern = parse_pattern(words[2]);
  tpl.mutation = parse_mutation(words[3]);
  tpl.label = words[2];
  for (std::size_t i = 4; i < words.size(); ++i) {
    if (words[i] == "whole") {
      tpl.whole_root = true;
    } else if (words[i] == "context" && i + 1 < words.size()) {
      tpl.context = g.segment(words[++i]);
      tpl.label += " || _" + words[i];
    } else {
      parse_fail(line_no, "unexpected redup option '" + words[i] + "'");
    }
  }
  return tpl;
}

std::string describe(const Slot& slot) {
  return "slot " + std::to_string(slot.index) + " (" + slot.name + ")";
}

void check_tag(const Slot& slot, const LexEntry& e) {
  if (e.tag.empty()) throw ValidationError(describe(slot) + ": entry '" + e.form + "' has no tag");
  if (e.tag.find_first_of("[] \t") != std::string::npos) {
    throw ValidationError(describe(slot) + ": bad tag '" + e.tag + "'");
  }
  for (const auto& part : strings::split(e.tag, '.')) {
    if (part.empty()) throw ValidationError(describe(slot) + ": empty component in tag '" + e.tag + "'");
  }
}

}  // namespace

const Slot& GrammarSpec::root_slot() const {
  for (const Slot& s : slots) {
    if (s.is_root()) return s;
  }
  throw ValidationError("grammar has no root slot");
}

PhonClasses GrammarSpec::phon_classes() const {
  PhonClasses c;
  c.vowels = {vowels.begin(), vowels.end()};
  c.nasals = {nasals.begin(), nasals.end()};
  return c;
}

std::vector<ReduplicationTemplate> GrammarSpec::redup_templates() const {
  return templates.empty() ? default_templates() : templates;
}

Graphemizer::Graphemizer(std::vector<std::string> inventory) : inventory_(std::move(inventory)) {
  std::stable_sort(inventory_.begin(), inventory_.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  inventory_.erase(std::unique(inventory_.begin(), inventory_.end()), inventory_.end());
  for (const auto& g : inventory_) {
    if (g.empty()) throw ValidationError("empty grapheme in inventory");
    max_length_ = std::max(max_length_, g.size());
  }
}

std::vector<std::string> Graphemizer::segment(std::string_view s) const {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::string* hit = nullptr;
    for (const auto& g : inventory_) {
      if (s.substr(pos).starts_with(g)) {
        hit = &g;
        break;
      }
    }
    if (hit == nullptr) throw SegmentationError(std::string(s), pos);
    out.push_back(*hit);
    pos += hit->size();
  }
  return out;
}

bool Graphemizer::contains(const std::string& g) const {
  return std::find(inventory_.begin(), inventory_.end(), g) != inventory_.end();
}

GrammarSpec parse_grammar(std::istream& is) {
  GrammarSpec spec;
  bool header_seen = false;
  Slot* current = nullptr;
  // Rules and redup lines need the inventory, which may be declared later.
  std::vector<std::pair<int, std::string>> rule_lines;
  std::vector<std::pair<int, std::vector<std::string>>> redup_lines;

  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const bool indented = !line.empty() && (line[0] == ' ' || line[0] == '\t');
    const auto words = strings::split_ws(line);
    if (words.empty()) continue;

    if (!header_seen) {
      if (words.size() != 2 || words[0] != kHeader || words[1] != "1") {
        parse_fail(line_no, "expected header 'morphboot-grammar 1'");
      }
      header_seen = true;
      continue;
    }

    if (indented) {
      if (current == nullptr) parse_fail(line_no, "entry outside a slot");
      LexEntry e;
      std::vector<std::string> w = words;
      if (w.size() >= 2 && w.back() == "oov") {
        e.held_out = true;
        w.pop_back();
      }
      if (current->is_root()) {
        if (w.size() > 2) parse_fail(line_no, "root entry is '<form> [gloss] [oov]'");
        e.form = w[0];
        if (w.size() == 2) e.tag = w[1];
      } else {
        if (w.size() != 2) parse_fail(line_no, "entry is '<form> <tag> [oov]'");
        e.form = w[0] == "0" ? "" : w[0];
        e.tag = w[1];
      }
      current->entries.push_back(std::move(e));
      continue;
    }

    current = nullptr;
    const std::string& key = words[0];
    auto rest = [&] { return std::vector<std::string>(words.begin() + 1, words.end()); };
    if (key == "name") {
      if (words.size() != 2) parse_fail(line_no, "name takes one value");
      spec.name = words[1];
    } else if (key == "graphemes") {
      spec.graphemes = rest();
    } else if (key == "vowels") {
      spec.vowels = rest();
    } else if (key == "nasals") {
      spec.nasals = rest();
    } else if (key == "markers") {
      spec.markers = rest();
    } else if (key == "category") {
      if (words.size() != 2) parse_fail(line_no, "category takes one tag");
      spec.category = words[1];
    } else if (key == "slot") {
      if (words.size() < 3) parse_fail(line_no, "slot needs an index and a name");
      Slot slot;
      try {
        slot.index = std::stoi(words[1]);
      } catch (const std::exception&) {
        parse_fail(line_no, "bad slot index '" + words[1] + "'");
      }
      slot.name = words[2];
      for (std::size_t i = 3; i < words.size(); ++i) {
        if (words[i] == "optional") {
          slot.optional = true;
        } else if (words[i] == "open") {
          slot.open_class = true;
        } else {
          parse_fail(line_no, "unknown slot flag '" + words[i] + "'");
        }
      }
      spec.slots.push_back(std::move(slot));
      current = &spec.slots.back();
    } else if (key == "rule") {
      rule_lines.emplace_back(line_no, std::string(strings::trim(line).substr(4)));
    } else if (key == "syncretism") {
      spec.syncretism.push_back(parse_syncretism_rule(strings::trim(line).substr(10)));
    } else if (key == "redup") {
      redup_lines.emplace_back(line_no, words);
    } else {
      parse_fail(line_no, "unknown declaration '" + key + "'");
    }
  }
  if (!header_seen) throw ValidationError("empty grammar file");

  const Graphemizer forms = form_graphemizer(spec);
  for (const auto& [line_no, text] : rule_lines) {
    try {
      spec.rules.push_back(parse_rule(forms, text, line_no));
    } catch (const SegmentationError& e) {
      parse_fail(line_no, e.what());
    }
  }
  const Graphemizer letters(spec.graphemes);
  for (const auto& [line_no, words] : redup_lines) {
    spec.templates.push_back(parse_redup(words, letters, line_no));
  }
  validate(spec);
  return spec;
}

GrammarSpec parse_grammar_text(const std::string& text) {
  std::istringstream in(text);
  return parse_grammar(in);
}

GrammarSpec load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grammar '" + path + "'");
  return parse_grammar(in);
}

void validate(const GrammarSpec& spec) {
  if (spec.graphemes.empty()) throw ValidationError("grammar declares no graphemes");
  const std::set<std::string> graphemes(spec.graphemes.begin(), spec.graphemes.end());
  for (const auto* group : {&spec.vowels, &spec.nasals}) {
    for (const auto& g : *group) {
      if (!graphemes.count(g)) throw ValidationError("'" + g + "' is not a declared grapheme");
    }
  }
  for (const auto& m : spec.markers) {
    if (graphemes.count(m) || m == kBoundary) {
      throw ValidationError("marker '" + m + "' clashes with a grapheme or the boundary");
    }
  }

  bool has_root = false;
  for (std::size_t i = 0; i < spec.slots.size(); ++i) {
    const Slot& slot = spec.slots[i];
    if (slot.index < kMinSlot || slot.index > kMaxSlot) {
      throw ValidationError(describe(slot) + ": index outside [-12, 2]");
    }
    if (i > 0 && slot.index <= spec.slots[i - 1].index) {
      throw ValidationError(describe(slot) + ": slot indices must increase strictly");
    }
    if (slot.is_root()) {
      has_root = true;
      if (slot.optional) throw ValidationError(describe(slot) + ": root slot cannot be optional");
    }
    if (!slot.optional && slot.entries.empty()) {
      throw ValidationError(describe(slot) + ": mandatory slot has no entries");
    }
  }
  if (!has_root) throw ValidationError("grammar has no root slot (index 0)");

  const Graphemizer letters(spec.graphemes);
  const Graphemizer forms = form_graphemizer(spec);
  for (const Slot& slot : spec.slots) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const LexEntry& e : slot.entries) {
      if (!seen.emplace(e.tag, e.form).second) {
        throw ValidationError(describe(slot) + ": duplicate entry '" + e.form + " " + e.tag + "'");
      }
      try {
        if (slot.is_root()) {
          if (e.form.empty()) throw ValidationError(describe(slot) + ": empty root form");
          letters.segment(e.form);
        } else {
          check_tag(slot, e);
          if (!e.form.empty()) forms.segment(e.form);
        }
      } catch (const SegmentationError& err) {
        throw ValidationError(describe(slot) + ": entry '" + e.form + "': " + err.what());
      }
    }
  }
  if (!spec.category.empty()) {
    check_tag(Slot{"category", 0, false, false, {}}, LexEntry{"", spec.category, false});
  }
  for (const RewriteRule& r : spec.rules) r.validate();
}

std::vector<std::string> graphemize(const GrammarSpec& spec, std::string_view s) {
  if (s.empty()) throw SegmentationError(std::string(s), 0);
  return Graphemizer(spec.graphemes).segment(s);
}

Graphemizer form_graphemizer(const GrammarSpec& spec) {
  std::vector<std::string> inv = spec.graphemes;
  inv.insert(inv.end(), spec.markers.begin(), spec.markers.end());
  inv.push_back(kBoundary);
  return Graphemizer(std::move(inv));
}

std::string tag_symbol(const std::string& tag) { return "[" + tag + "]"; }

std::shared_ptr<const SymbolTable> build_symbols(const GrammarSpec& spec) {
  auto table = std::make_shared<SymbolTable>();
  for (const auto& g : spec.graphemes) table->add(g);
  for (const auto& m : spec.markers) table->add(m);
  table->add(kBoundary);
  if (!spec.category.empty()) table->add(tag_symbol(spec.category));
  for (const Slot& slot : spec.slots) {
    if (slot.is_root()) continue;
    for (const LexEntry& e : slot.entries) table->add(tag_symbol(e.tag));
  }
  return table;
}

Transducer compile_morphotactics(const GrammarSpec& spec, std::shared_ptr<const SymbolTable> symbols,
                                 const CompileOptions& options) {
  validate(spec);
  const SymbolTable& table = *symbols;
  auto id = [&](const std::string& s) {
    const auto l = table.find(s);
    if (!l) throw ConfigError("symbol '" + s + "' missing from the symbol table");
    return *l;
  };
  const Label boundary = id(kBoundary);
  const Graphemizer letters(spec.graphemes);
  const Graphemizer forms = form_graphemizer(spec);

  Transducer t(symbols);
  const std::size_t n = spec.slots.size();
  // phase[k][e]: before slot k; e = 1 once a non-empty morph was written.
  std::vector<std::array<StateId, 2>> phase(n + 1);
  for (auto& p : phase) p = {t.add_state(), t.add_state()};
  const StateId start = t.add_state();
  t.set_start(start);
  if (spec.category.empty()) {
    t.add_arc(start, kEpsilon, kEpsilon, phase[0][0]);
  } else {
    t.add_arc(start, id(tag_symbol(spec.category)), kEpsilon, phase[0][0]);
  }
  t.set_final(phase[n][0]);
  t.set_final(phase[n][1]);

  // Adds a path src -> dst reading `in` and writing `out`, pairing labels
  // position by position and padding the shorter side with epsilon.
  auto add_path = [&](StateId src, const std::vector<Label>& in, const std::vector<Label>& out,
                      StateId dst) {
    const std::size_t len = std::max<std::size_t>({in.size(), out.size(), 1});
    StateId cur = src;
    for (std::size_t i = 0; i < len; ++i) {
      const StateId next = i + 1 == len ? dst : t.add_state();
      t.add_arc(cur, i < in.size() ? in[i] : kEpsilon, i < out.size() ? out[i] : kEpsilon, next);
      cur = next;
    }
  };

  for (std::size_t k = 0; k < n; ++k) {
    const Slot& slot = spec.slots[k];
    std::size_t active = 0;
    for (const LexEntry& e : slot.entries) {
      if (e.held_out && !options.include_held_out) continue;
      ++active;
      std::vector<Label> in, form;
      if (slot.is_root()) {
        for (const auto& g : letters.segment(e.form)) form.push_back(id(g));
        in = form;
      } else {
        in.push_back(id(tag_symbol(e.tag)));
        if (!e.form.empty()) {
          for (const auto& g : forms.segment(e.form)) form.push_back(id(g));
        }
      }
      for (int emitted = 0; emitted < 2; ++emitted) {
        if (form.empty()) {
          add_path(phase[k][emitted], in, {}, phase[k + 1][emitted]);
          continue;
        }
        std::vector<Label> out = form;
        std::vector<Label> input = in;
        if (emitted) {
          out.insert(out.begin(), boundary);
          // Keep the input aligned with the morph, not with the boundary.
          if (slot.is_root()) input.insert(input.begin(), kEpsilon);
        }
        add_path(phase[k][emitted], input, out, phase[k + 1][1]);
      }
    }
    if (!slot.optional && active == 0) {
      throw ValidationError(describe(slot) + ": no entries left after holding out");
    }
    if (slot.optional) {
      for (int emitted = 0; emitted < 2; ++emitted) {
        t.add_arc(phase[k][emitted], kEpsilon, kEpsilon, phase[k + 1][emitted]);
      }
    }
  }
  return fst::trim(t);
}

Transducer compile_morphotactics(const GrammarSpec& spec, const CompileOptions& options) {
  return compile_morphotactics(spec, build_symbols(spec), options);
}

CompiledGrammar compile_grammar(const GrammarSpec& spec, const CompileOptions& options) {
  auto symbols = build_symbols(spec);
  Transducer morphotactic = compile_morphotactics(spec, symbols, options);
  Transducer analyzer = compose_cascade(spec.rules, morphotactic);
  CompiledGrammar out{symbols, std::move(morphotactic), std::move(analyzer)};
  const Label boundary = *out.symbols->find(kBoundary);
  for (std::size_t s = 0; s < out.analyzer.num_states(); ++s) {
    for (const Arc& a : out.analyzer.arcs(static_cast<StateId>(s))) {
      if (a.out == boundary) {
        throw ValidationError("morph boundary survives the rule cascade; add a rule deleting it");
      }
    }
  }
  return out;
}

std::vector<std::string> parse_analysis(const GrammarSpec& spec, std::string_view text) {
  const Graphemizer letters(spec.graphemes);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '[') {
      const auto close = text.find(']', pos);
      if (close == std::string_view::npos || close == pos + 1) {
        throw InputError("malformed tag in analysis '" + std::string(text) + "'");
      }
      out.push_back(std::string(text.substr(pos, close - pos + 1)));
      pos = close + 1;
      continue;
    }
    const auto next = text.find('[', pos);
    const auto chunk = text.substr(pos, next == std::string_view::npos ? next : next - pos);
    for (auto& g : letters.segment(chunk)) out.push_back(std::move(g));
    pos += chunk.size();
  }
  return out;
}

}  // namespace morphboot
