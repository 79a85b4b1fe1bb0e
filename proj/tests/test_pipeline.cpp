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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "morphboot/error.hpp"
#include "morphboot/pipeline.hpp"

using namespace morphboot;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const fs::path& dir) {
  PipelineConfig c;
  c.grammar = MORPHBOOT_DATA_DIR "/toylang.grammar";
  c.output_dir = dir.string();
  c.generate_n = 1500;
  c.corpus_n = 300;
  c.test = {.in_vocab = 30, .oov_root = 10, .oov_nominal = 5, .redup = 10};
  c.hyper.max_epochs = 1;
  c.hyper.embed = 8;
  c.hyper.hidden = 8;
  c.hyper.beam = 2;
  return c;
}

std::size_t stage_dirs(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir / "stages")) n += e.is_directory() ? 1 : 0;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("config validation") {
  PipelineConfig c = small_config("/tmp/unused");
  CHECK_NOTHROW(c.validate());
  c.grammar = "/nonexistent.grammar";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config("/tmp/unused");
  c.halluc_fraction = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config("/tmp/unused");
  c.ratios = {0.5, 0.1, 0.1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config("/tmp/unused");
  c.hyper.hidden = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("synthetic corpus is deterministic and grammatical") {
  const GrammarSpec spec = load_grammar(MORPHBOOT_DATA_DIR "/toylang.grammar");
  const CompiledGrammar full = compile_grammar(spec, {.include_held_out = true});
  const auto a = synthesize_corpus(spec, full, 200, 1.0, 5);
  CHECK(a.size() == 200);
  CHECK(a == synthesize_corpus(spec, full, 200, 1.0, 5));
  CHECK(a != synthesize_corpus(spec, full, 200, 1.0, 6));
  for (const auto& w : a) CHECK_FALSE(fst::apply(full.analyzer, w, Direction::kUp).empty());
}

TEST_CASE("experiment: rows, artifacts, content addressing, stage errors") {
  const fs::path dir = fs::temp_directory_path() / "morphboot-test-pipeline";
  fs::remove_all(dir);
  const PipelineConfig c = small_config(dir);
  std::ostringstream log;
  const ExperimentResult r = run_experiment(c, &log);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].name == "FST");
  CHECK(r.rows[3].name == "Base+halluc+resample");
  CHECK(r.rows[0].report.n == 55);
  CHECK(r.rows[0].report.coverage < 100);
  for (std::size_t i = 1; i < 4; ++i) CHECK(r.rows[i].report.coverage == 100);
  CHECK(r.rows[1].redup.recall == 0);  // REDUP is not in the Base vocabulary
  CHECK(slurp(dir / "report.txt") == r.report_text);
  CHECK(slurp(dir / "report.kv") == r.report_kv);
  // grammar has no stage dir; data, test, corpus, halluc, resample, 4 predict, 3 model.
  CHECK(stage_dirs(dir) == 12);
  CHECK(log.str().find("reusing") == std::string::npos);

  // Same config: everything reused, identical report.
  std::ostringstream again;
  CHECK(run_experiment(c, &again).report_kv == r.report_kv);
  CHECK(again.str().find("[model-Base] reusing") != std::string::npos);
  CHECK(again.str().find("done in") == std::string::npos);

  // A new training seed retrains the models only.
  PipelineConfig d = c;
  d.seeds.train = 99;
  std::ostringstream third;
  run_experiment(d, &third);
  CHECK(third.str().find("[data] reusing") != std::string::npos);
  CHECK(third.str().find("[model-Base] done") != std::string::npos);
  CHECK(stage_dirs(dir) == 12 + 6);

  // An impossible test composition names the failing stage.
  PipelineConfig e = c;
  e.test.in_vocab = 100000;
  try {
    run_experiment(e);
    FAIL("expected a stage error");
  } catch (const StageError& err) {
    CHECK(err.stage() == "test");
  }
  fs::remove_all(dir);
}
