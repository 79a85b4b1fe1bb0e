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

// Context-dependent rewrite rules `lhs -> rhs / left _ right`.
//
// Semantics are deliberately narrow: every rule is obligatory and applied in a
// single left-to-right pass over the input. At each position the rule fires
// when `left` ends there and `lhs right` starts there (both tested on the
// input, never on output already produced); after firing, scanning resumes
// right after `lhs`.

#ifndef MORPHBOOT_REWRITE_HPP_
#define MORPHBOOT_REWRITE_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "morphboot/transducer.hpp"

namespace morphboot {

struct RewriteRule {
  std::vector<std::string> lhs;
  std::vector<std::string> rhs;  // empty means deletion
  std::vector<std::string> left;
  std::vector<std::string> right;

  // Throws ValidationError on an empty lhs or a context-free identity rule.
  void validate() const;
  std::string to_string() const;

  bool operator==(const RewriteRule&) const = default;
};

// Direct string-scanning implementation of the rule semantics.
std::vector<std::string> oracle_rewrite(const RewriteRule& rule, std::span<const std::string> s);

// Transducer realising the rule over `sigma` (identity on everything the rule
// does not touch). The result is deterministic on its input tape and total on
// sigma*. Throws ConfigError when a rule symbol is missing from the table or
// from sigma.
Transducer compile_rule(const RewriteRule& rule, std::shared_ptr<const SymbolTable> symbols,
                        std::span<const Label> sigma);

// Same, with sigma = every non-epsilon symbol of the table.
Transducer compile_rule(const RewriteRule& rule, std::shared_ptr<const SymbolTable> symbols);

// morphotactic ∘ rule_1 ∘ ... ∘ rule_n. Each rule's sigma is the output
// alphabet of the transducer it is composed onto plus the rule's own symbols.
Transducer compose_cascade(std::span<const RewriteRule> rules, const Transducer& morphotactic);

}  // namespace morphboot

#endif  // MORPHBOOT_REWRITE_HPP_
