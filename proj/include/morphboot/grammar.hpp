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

// Slot grammars and their compilation into the morphotactic transducer.
//
// Grammar file (version 1), one declaration per line, `#` comments:
//
//   morphboot-grammar 1
//   name        <identifier>
//   graphemes   ng nj rr a b ...        multigraphs may appear in any order
//   vowels      a e i o u
//   nasals      m n ng
//   markers     ~                       non-letter symbols usable in forms
//   category    V                       leading tag with no surface form
//   slot <index> <name> [optional] [open]
//     <form> <tag> [oov]                one entry; form 0 = null morph
//   slot 0 root
//     <form> [gloss] [oov]              oov roots are held out of the analyzer
//   rule <lhs> -> <rhs> [/ <left> _ <right>]     rhs 0 = deletion
//   syncretism <name> tags A|B
//   syncretism <name> components A|B at 0,1 [when *.*.X]
//   redup <type> <pattern> <mutation> [whole] [context <graphemes>]
//
// Entry lines are those following a `slot` line that start with whitespace.
// Rule sides and forms are segmented with the grapheme inventory plus markers
// and the morph boundary `ˆ`.

#ifndef MORPHBOOT_GRAMMAR_HPP_
#define MORPHBOOT_GRAMMAR_HPP_

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "morphboot/redup.hpp"
#include "morphboot/rewrite.hpp"
#include "morphboot/syncretism.hpp"
#include "morphboot/transducer.hpp"

namespace morphboot {

// Morph boundary written by the morphotactic transducer between morphs.
inline const std::string kBoundary = "ˆ";

struct LexEntry {
  std::string form;  // empty for a null morph
  std::string tag;   // gloss for roots
  bool held_out = false;
};

struct Slot {
  std::string name;
  int index = 0;
  bool optional = false;
  bool open_class = false;
  std::vector<LexEntry> entries;

  bool is_root() const { return index == 0; }
};

struct GrammarSpec {
  std::string name;
  std::vector<std::string> graphemes;
  std::vector<std::string> vowels;
  std::vector<std::string> nasals;
  std::vector<std::string> markers;
  std::string category;  // empty: no category tag
  std::vector<Slot> slots;
  std::vector<RewriteRule> rules;
  std::vector<SyncretismRule> syncretism;
  std::vector<ReduplicationTemplate> templates;  // empty: default table

  const Slot& root_slot() const;
  PhonClasses phon_classes() const;
  std::vector<ReduplicationTemplate> redup_templates() const;
};

// Longest-match left-to-right segmentation over a fixed inventory.
class Graphemizer {
 public:
  explicit Graphemizer(std::vector<std::string> inventory);

  // Throws SegmentationError (with byte position) on an unknown character.
  std::vector<std::string> segment(std::string_view s) const;
  bool contains(const std::string& g) const;

 private:
  std::vector<std::string> inventory_;  // sorted by decreasing length
  std::size_t max_length_ = 0;
};

GrammarSpec parse_grammar(std::istream& is);
GrammarSpec parse_grammar_text(const std::string& text);
GrammarSpec load_grammar(const std::string& path);

// Throws ValidationError naming the offending slot or entry.
void validate(const GrammarSpec& spec);

// Segments `s` over the spec's grapheme inventory. Throws SegmentationError.
std::vector<std::string> graphemize(const GrammarSpec& spec, std::string_view s);

// Inventory of graphemes, markers and the boundary, used for forms and rules.
Graphemizer form_graphemizer(const GrammarSpec& spec);

// Symbol table holding every grapheme, marker, the boundary and all
// bracketed tags "[tag]" of the grammar (held-out entries included).
std::shared_ptr<const SymbolTable> build_symbols(const GrammarSpec& spec);

std::string tag_symbol(const std::string& tag);

struct CompileOptions {
  bool include_held_out = false;
};

// Input side: bracketed tags and root graphemes; output side: the
// intermediate form with `ˆ` between consecutive non-empty morphs. Acyclic
// and trimmed.
Transducer compile_morphotactics(const GrammarSpec& spec, std::shared_ptr<const SymbolTable> symbols,
                                 const CompileOptions& options = {});
Transducer compile_morphotactics(const GrammarSpec& spec, const CompileOptions& options = {});

struct CompiledGrammar {
  std::shared_ptr<const SymbolTable> symbols;
  Transducer morphotactic;
  Transducer analyzer;  // morphotactic composed with the rule cascade
};

// Compiles morphotactics and the rule cascade. Throws ValidationError if the
// boundary survives on the surface side.
CompiledGrammar compile_grammar(const GrammarSpec& spec, const CompileOptions& options = {});

// Parses "[V][1pl.incl.3sg.PST][GIN.bim]bu[PP]" into analysis symbols.
std::vector<std::string> parse_analysis(const GrammarSpec& spec, std::string_view text);

}  // namespace morphboot

#endif  // MORPHBOOT_GRAMMAR_HPP_
