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

#include <doctest.h>

#include <algorithm>

#include "morphboot/error.hpp"
#include "morphboot/grammar.hpp"
#include "morphboot/strings.hpp"
#include "morphboot/syncretism.hpp"

using namespace morphboot;

namespace {

std::vector<std::string> as_strings(const std::vector<std::vector<std::string>>& v) {
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(strings::join(x, " "));
  return out;
}

}  // namespace

TEST_CASE("component syncretism expands both positions") {
  const GrammarSpec spec = load_grammar(MORPHBOOT_DATA_DIR "/kunwinjku.grammar");
  const auto out = as_strings(
      syncretism_expand(strings::split_ws("[ V ] [ 3ua . 3ua . nonpast ] b u [ PP ]"), spec.syncretism));
  CHECK(out == std::vector<std::string>{
                   "[ V ] [ 3pl . 3pl . nonpast ] b u [ PP ]",
                   "[ V ] [ 3pl . 3ua . nonpast ] b u [ PP ]",
                   "[ V ] [ 3ua . 3pl . nonpast ] b u [ PP ]",
                   "[ V ] [ 3ua . 3ua . nonpast ] b u [ PP ]",
               });
  // The context requires nonpast.
  CHECK(syncretism_expand(strings::split_ws("[ 3ua . 3ua . past ]"), spec.syncretism).size() == 1);
}

TEST_CASE("tag syncretism for null prefixes") {
  const GrammarSpec spec = load_grammar(MORPHBOOT_DATA_DIR "/kunwinjku.grammar");
  const auto out =
      as_strings(syncretism_expand(strings::split_ws("[ 3sg . past ] b u"), spec.syncretism));
  CHECK(out == std::vector<std::string>{"[ 1sg . 2 . past ] b u", "[ 3sg . past ] b u"});
  CHECK(syncretism_expand(strings::split_ws("[ 3sg . past ] b u"), spec.syncretism,
                          std::string("kabindi"))
            .size() == 1);
}

TEST_CASE("expansion is a closure containing the input") {
  std::vector<SyncretismRule> rules{parse_syncretism_rule("a tags X|Y"),
                                    parse_syncretism_rule("b tags Y|Z"),
                                    parse_syncretism_rule("c components p|q at 1")};
  const auto x = expand_tag("X", rules);
  CHECK(x == std::vector<std::string>{"X", "Y", "Z"});
  // Every member expands to the same class.
  for (const auto& t : x) CHECK(expand_tag(t, rules) == x);
  const auto tokens = strings::split_ws("[ X ] r [ a . p ]");
  const auto all = syncretism_expand(tokens, rules);
  CHECK(all.size() == 6);
  CHECK(std::find(all.begin(), all.end(), tokens) != all.end());
  CHECK(std::is_sorted(all.begin(), all.end()));

  CHECK_THROWS_AS(parse_syncretism_rule("x tags A"), ValidationError);
  CHECK_THROWS_AS(parse_syncretism_rule("x components A|B at z"), ValidationError);
  CHECK_THROWS_AS(parse_syncretism_rule("x other A|B"), ValidationError);
}
