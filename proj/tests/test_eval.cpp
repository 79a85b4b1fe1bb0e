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
#include <random>
#include <sstream>

#include "morphboot/error.hpp"
#include "morphboot/eval.hpp"
#include "morphboot/grammar.hpp"
#include "morphboot/strings.hpp"

using namespace morphboot;

namespace {

GoldItem gold(const std::string& tokens, std::optional<ErrorClass> c = std::nullopt) {
  return GoldItem{"w", strings::split_ws(tokens), c, std::nullopt};
}

Prediction pred(const std::string& tokens) { return strings::split_ws(tokens); }

const TagScore& tag(const EvalReport& r, const std::string& name) {
  for (const auto& t : r.tags) {
    if (t.tag == name) return t;
  }
  FAIL("no tag " << name);
  return r.tags.front();
}

}  // namespace

TEST_CASE("all-or-nothing arithmetic") {
  std::vector<GoldItem> golds;
  std::vector<Prediction> preds;
  for (int i = 0; i < 10; ++i) {
    golds.push_back(gold("[ A ] r"));
    preds.push_back(i < 7 ? pred("[ A ] r") : i < 8 ? pred("[ B ] r") : Prediction{});
  }
  const EvalReport r = evaluate(preds, golds, {});
  CHECK(r.coverage == doctest::Approx(80.0));
  CHECK(r.accuracy == doctest::Approx(70.0));
  CHECK(r.precision == doctest::Approx(87.5));
  CHECK(r.accuracy == doctest::Approx(r.coverage * r.precision / 100));
  CHECK_THROWS_AS(evaluate(std::span(preds).first(9), golds, {}), InputError);
}

TEST_CASE("published FST row satisfies the metric identity") {
  CHECK(std::abs(88.5 * 95.4 / 100 - 84.4) <= 0.05);
}

TEST_CASE("perfect analyzer") {
  const std::vector<GoldItem> golds{gold("[ A ] [ B ] r"), gold("[ C ] s [ D ]")};
  const std::vector<Prediction> preds{pred("[ A ] [ B ] r"), pred("[ C ] s [ D ]")};
  const EvalReport r = evaluate(preds, golds, {});
  CHECK(r.accuracy == 100);
  CHECK(r.coverage == 100);
  CHECK(r.precision == 100);
  CHECK(r.macro_precision == doctest::Approx(100));
  CHECK(r.macro_recall == doctest::Approx(100));
  CHECK(r.macro_f1 == doctest::Approx(100));
}

TEST_CASE("macro tag scores on a hand-computed fixture") {
  const std::vector<GoldItem> golds{gold("[ A ] [ B ] r"), gold("[ A ] [ C ] r"), gold("[ B ] r"),
                                    gold("[ C ] r"), gold("[ A ] r")};
  const std::vector<Prediction> preds{pred("[ A ] [ B ] r"), pred("[ A ] [ B ] r"),
                                      pred("[ B ] [ B ] r"), Prediction{}, pred("[ D ] r")};
  const EvalReport r = evaluate(preds, golds, {});
  CHECK(r.accuracy == doctest::Approx(20));
  CHECK(r.coverage == doctest::Approx(80));
  CHECK(r.precision == doctest::Approx(25));
  REQUIRE(r.tags.size() == 4);
  CHECK(tag(r, "A").precision == doctest::Approx(100));
  CHECK(tag(r, "A").recall == doctest::Approx(200.0 / 3));
  CHECK(tag(r, "A").f1 == doctest::Approx(80));
  CHECK(tag(r, "B").tp == 2);
  CHECK(tag(r, "B").fp == 2);
  CHECK(tag(r, "B").f1 == doctest::Approx(200.0 / 3));
  CHECK(tag(r, "C").fn == 2);
  CHECK(tag(r, "D").fp == 1);
  CHECK(r.macro_precision == doctest::Approx(37.5));
  CHECK(r.macro_recall == doctest::Approx(125.0 / 3));
  CHECK(r.macro_f1 == doctest::Approx(110.0 / 3));
}

TEST_CASE("redup metrics") {
  std::vector<GoldItem> golds{gold("[ REDUP ] r"), gold("[ REDUP ] s"), gold("r"), gold("s"), gold("t")};
  std::vector<Prediction> preds{pred("[ REDUP ] r"), pred("[ REDUP ] x"), pred("[ REDUP ] r"),
                                pred("[ REDUP ] s"), pred("[ REDUP ] t")};
  RedupMetrics m = redup_metrics(preds, golds);
  CHECK(m.recall == doctest::Approx(100));
  CHECK(m.precision == doctest::Approx(40));
  preds = {pred("r"), pred("s"), pred("r"), pred("s"), pred("t")};
  m = redup_metrics(preds, golds);
  CHECK(m.recall == 0);
  CHECK(m.predicted == 0);
}

TEST_CASE("evaluation properties on random reports") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> tags{"A", "B", "C", "D"};
  std::uniform_int_distribution<int> pick(0, 3), len(1, 3), coin(0, 3);
  auto random_analysis = [&] {
    std::string s;
    for (int k = len(rng); k > 0; --k) s += "[ " + tags[pick(rng)] + " ] ";
    return s + "r";
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GoldItem> golds;
    std::vector<Prediction> preds;
    for (int i = 0; i < 20; ++i) {
      golds.push_back(gold(random_analysis(), coin(rng) ? std::optional(ErrorClass::kOovRoot) : std::nullopt));
      const int c = coin(rng);
      preds.push_back(c == 0 ? Prediction{} : c == 1 ? pred(random_analysis()) : Prediction{golds.back().analysis});
    }
    const EvalReport r = evaluate(preds, golds, {});
    CHECK(r.accuracy == doctest::Approx(r.coverage * r.precision / 100).epsilon(1e-12));
    for (double v : {r.accuracy, r.coverage, r.precision, r.macro_precision, r.macro_recall, r.macro_f1}) {
      CHECK(v >= 0);
      CHECK(v <= 100);
    }
    // Permutation invariance.
    std::vector<std::size_t> perm(golds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<GoldItem> pg;
    std::vector<Prediction> pp;
    for (std::size_t i : perm) {
      pg.push_back(golds[i]);
      pp.push_back(preds[i]);
    }
    const EvalReport q = evaluate(pp, pg, {}, Exec::kSerial);
    CHECK(q.accuracy == r.accuracy);
    CHECK(q.macro_f1 == doctest::Approx(r.macro_f1));
    // Withholding wrong predictions: coverage falls, precision does not.
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] && *preds[i] != golds[i].analysis) preds[i].reset();
    }
    const EvalReport w = evaluate(preds, golds, {});
    CHECK(w.coverage <= r.coverage);
    CHECK(w.accuracy == r.accuracy);
    CHECK(w.precision >= r.precision);
  }
}

TEST_CASE("syncretic variants score as correct") {
  const GrammarSpec spec = load_grammar(MORPHBOOT_DATA_DIR "/kunwinjku.grammar");
  const GoldItem g = gold("[ V ] [ 3ua . 3ua . nonpast ] b u [ PP ]");
  const auto variants = syncretism_expand(g.analysis, spec.syncretism);
  CHECK(variants.size() == 4);
  for (const auto& v : variants) CHECK(is_correct(v, g, spec.syncretism));
  CHECK_FALSE(is_correct(strings::split_ws("[ V ] [ 3sg . 3ua . nonpast ] b u [ PP ]"), g, spec.syncretism));
  // Restricting to the other rule disables the expansion.
  GoldItem only = g;
  only.syncretism_class = "nullpro";
  CHECK_FALSE(is_correct(variants.front(), only, spec.syncretism));
}

TEST_CASE("error-class accuracy and gold files") {
  const std::vector<GoldItem> golds{gold("[ A ] r", ErrorClass::kOovRoot), gold("[ A ] s", ErrorClass::kOovRoot),
                                    gold("[ REDUP ] r", ErrorClass::kReduplication), gold("[ A ] t")};
  const std::vector<Prediction> preds{pred("[ A ] r"), Prediction{}, pred("r"), pred("[ A ] t")};
  const EvalReport r = evaluate(preds, golds, {});
  REQUIRE(r.classes.size() == 2);
  CHECK(r.classes[0].error_class == ErrorClass::kReduplication);
  CHECK(r.classes[0].accuracy == 0);
  CHECK(r.classes[1].error_class == ErrorClass::kOovRoot);
  CHECK(r.classes[1].accuracy == doctest::Approx(50));

  std::vector<GoldItem> items = golds;
  items[3].syncretism_class = "bindi";
  std::stringstream ss;
  write_gold(ss, items);
  CHECK(read_gold(ss) == items);
  CHECK(format_gold(items[2]) == "w\t[ REDUP ] r\tReduplication");
  CHECK(format_gold(items[3]) == "w\t[ A ] t\t\tbindi");
  CHECK_THROWS_AS(parse_gold("w\t[ A ] r\tNonsense"), FormatError);
  CHECK_THROWS_AS(parse_gold("only-one-field"), FormatError);
  CHECK_THROWS_AS(parse_gold("w\t[ A r"), TokenizationError);

  std::stringstream text, kv;
  const std::vector<ReportRow> rows{{"FST", r, redup_metrics(preds, golds)}};
  write_report_text(text, rows);
  write_report_kv(kv, rows);
  CHECK(text.str().find("FST") != std::string::npos);
  CHECK(kv.str().find("FST.accuracy=50.000000\n") != std::string::npos);
  CHECK(kv.str().find("FST.class.OOV_root=50.000000\n") != std::string::npos);
}
