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

// Command-line driver. Every option may also be set in a TOML config file
// passed with --config, under a section named after the subcommand; options
// given on the command line take precedence.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "morphboot/datagen.hpp"
#include "morphboot/distro.hpp"
#include "morphboot/error.hpp"
#include "morphboot/eval.hpp"
#include "morphboot/grammar.hpp"
#include "morphboot/halluc.hpp"
#include "morphboot/neural.hpp"
#include "morphboot/pipeline.hpp"
#include "morphboot/strings.hpp"

namespace mb = morphboot;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

// Lines of a file, or of stdin for "-".
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream file;
  std::istream* is = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file) throw mb::ConfigError("cannot open '" + path + "'");
    is = &file;
  }
  std::vector<std::string> out;
  for (std::string line; std::getline(*is, line);) {
    const auto t = mb::strings::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// Writes to a file, or stdout for "-".
template <typename F>
void with_output(const std::string& path, F&& f) {
  if (path == "-") {
    f(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw mb::ConfigError("cannot write '" + path + "'");
  f(os);
}

std::vector<mb::TrainingPair> read_pairs_from(const std::string& path) {
  if (path == "-") return mb::read_pairs(std::cin);
  return mb::load_pairs(path);
}

mb::BigramTable load_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw mb::ConfigError("cannot open bigram table '" + path + "'");
  return mb::BigramTable::read(is);
}

void add_hyper(CLI::App* app, mb::neural::Hyper& h) {
  app->add_option("--embed", h.embed, "Embedding size")->capture_default_str();
  app->add_option("--hidden", h.hidden, "GRU hidden size")->capture_default_str();
  app->add_option("--src-vocab", h.src_vocab, "Source vocabulary capacity")->capture_default_str();
  app->add_option("--trg-vocab", h.trg_vocab, "Target vocabulary capacity")->capture_default_str();
  app->add_option("--dropout-rnn", h.dropout_rnn, "Recurrent dropout")->capture_default_str();
  app->add_option("--dropout-src", h.dropout_src, "Source word dropout")->capture_default_str();
  app->add_option("--dropout-trg", h.dropout_trg, "Target word dropout")->capture_default_str();
  app->add_option("--patience", h.patience, "Validations without improvement before stopping")
      ->capture_default_str();
  app->add_option("--beam", h.beam, "Beam size for decoding")->capture_default_str();
  app->add_option("--max-epochs", h.max_epochs, "Epoch limit")->capture_default_str();
  app->add_option("--batch-size", h.batch_size, "Minibatch size")->capture_default_str();
  app->add_option("--max-updates", h.max_updates, "Update limit (0: none)")->capture_default_str();
  app->add_option("--valid-every", h.valid_every, "Updates between validations (0: per epoch)")
      ->capture_default_str();
  app->add_option("--learning-rate", h.learning_rate, "Adam step size")->capture_default_str();
  app->add_option("--clip-norm", h.clip_norm, "Global gradient norm limit")->capture_default_str();
  app->add_option("--ema-decay", h.ema_decay, "Parameter averaging decay")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"morphboot: bootstrap a neural morphological analyzer from a finite-state grammar"};
  app.set_config("--config", "", "TOML config file; command-line flags win");
  app.require_subcommand(1);

  std::string grammar, in = "-", out = "-";
  bool held_out = false;

  // compile
  auto* compile = app.add_subcommand("compile", "Compile a grammar and write the analyzer transducer");
  compile->add_option("--grammar", grammar, "Grammar file")->required();
  compile->add_option("--out", out, "Transducer text output")->capture_default_str();
  compile->add_flag("--include-held-out", held_out, "Keep entries marked oov");
  compile->callback([&] {
    const auto spec = mb::load_grammar(grammar);
    const auto g = mb::compile_grammar(spec, {.include_held_out = held_out});
    with_output(out, [&](std::ostream& os) { mb::fst::write_text(g.analyzer, os); });
    std::cerr << "states " << g.analyzer.num_states() << ", arcs " << g.analyzer.num_arcs()
              << ", analyses " << mb::fst::count_paths(g.morphotactic) << '\n';
  });

  // generate
  std::size_t n = 10000;
  std::uint64_t seed = 1, split_seed = 2;
  std::vector<double> ratios{0.8, 0.1, 0.1};
  std::string split_prefix;
  auto* generate = app.add_subcommand("generate", "Sample unique surface/analysis pairs");
  generate->add_option("--grammar", grammar, "Grammar file")->required();
  generate->add_option("--n", n, "Random walks")->capture_default_str();
  generate->add_option("--seed", seed, "Walk seed")->capture_default_str();
  generate->add_flag("--include-held-out", held_out, "Keep entries marked oov");
  generate->add_option("--out", out, "Pairs output")->capture_default_str();
  generate->add_option("--split", split_prefix, "Also write PREFIX.{train,dev,test}.tsv");
  generate->add_option("--split-seed", split_seed, "Split seed")->capture_default_str();
  generate->add_option("--ratios", ratios, "train dev test ratios")->expected(3)->capture_default_str();
  generate->callback([&] {
    const auto spec = mb::load_grammar(grammar);
    const auto g = mb::compile_grammar(spec, {.include_held_out = held_out});
    mb::GenerateStats st;
    const auto pairs = mb::generate_pairs(g.analyzer, n, seed, {}, &st);
    with_output(out, [&](std::ostream& os) { mb::write_pairs(os, pairs); });
    std::cerr << st.raw << " walks, " << st.unique << " unique pairs\n";
    if (!split_prefix.empty()) {
      const auto s = mb::split(pairs, {ratios[0], ratios[1], ratios[2]}, split_seed);
      mb::save_pairs(split_prefix + ".train.tsv", s.train);
      mb::save_pairs(split_prefix + ".dev.tsv", s.dev);
      mb::save_pairs(split_prefix + ".test.tsv", s.test);
      std::cerr << "train " << s.train.size() << ", dev " << s.dev.size() << ", test " << s.test.size() << '\n';
    }
  });

  // tokenize
  bool analyses = false;
  auto* tokenize = app.add_subcommand("tokenize", "Split words into graphemes, or analyses into target tokens");
  tokenize->add_option("--grammar", grammar, "Grammar file")->required();
  tokenize->add_option("--in", in, "One item per line")->capture_default_str();
  tokenize->add_option("--out", out, "Output")->capture_default_str();
  tokenize->add_flag("--analysis", analyses, "Inputs are analyses like [V][3sg.PST]bu[PP]");
  tokenize->callback([&] {
    const auto spec = mb::load_grammar(grammar);
    const auto lines = read_lines(in);
    with_output(out, [&](std::ostream& os) {
      for (const auto& l : lines) {
        const auto toks = analyses ? mb::tokenize_target(mb::parse_analysis(spec, l)) : mb::graphemize(spec, l);
        os << mb::strings::join(toks, " ") << '\n';
      }
    });
  });

  // hallucinate
  double fraction = 0.08;
  bool append = false;
  auto* halluc = app.add_subcommand("hallucinate", "Synthesize reduplicated training pairs");
  halluc->add_option("--grammar", grammar, "Grammar file (templates and phonology)")->required();
  halluc->add_option("--in", in, "Training pairs")->capture_default_str();
  halluc->add_option("--out", out, "Output pairs")->capture_default_str();
  halluc->add_option("--fraction", fraction, "Share of pairs to reduplicate")->capture_default_str();
  halluc->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  halluc->add_flag("--append", append, "Write the input pairs as well");
  halluc->callback([&] {
    const auto spec = mb::load_grammar(grammar);
    auto pairs = read_pairs_from(in);
    mb::HallucStats st;
    const auto made = mb::hallucinate(pairs, {.fraction = fraction, .seed = seed}, spec.redup_templates(),
                                      spec.phon_classes(), &st);
    if (!append) pairs.clear();
    pairs.insert(pairs.end(), made.begin(), made.end());
    with_output(out, [&](std::ostream& os) { mb::write_pairs(os, pairs); });
    std::cerr << st.sampled << " sampled, " << st.produced << " produced, " << st.no_template
              << " without template, " << st.unaligned << " unaligned\n";
  });

  // tag-corpus
  bool first_only = false;
  auto* tag = app.add_subcommand("tag-corpus", "Analyse a word list and estimate tag bigrams");
  tag->add_option("--grammar", grammar, "Grammar file")->required();
  tag->add_option("--in", in, "One word per line")->capture_default_str();
  tag->add_option("--out", out, "Bigram table output")->capture_default_str();
  tag->add_flag("--first-only", first_only, "Count only the first analysis of each word");
  tag->callback([&] {
    const auto spec = mb::load_grammar(grammar);
    const auto g = mb::compile_grammar(spec);
    std::vector<std::vector<std::string>> words;
    for (const auto& l : read_lines(in)) words.push_back(mb::graphemize(spec, l));
    mb::TagCorpusStats st;
    const auto seqs = mb::tag_corpus(g.analyzer, words, {.first_analysis_only = first_only}, &st);
    const auto table = mb::estimate_bigrams(seqs);
    with_output(out, [&](std::ostream& os) { table.write(os); });
    std::cerr << st.words << " words, " << st.analysed << " analysed, " << st.sequences << " sequences\n";
  });

  // score
  std::string bigrams;
  auto* score = app.add_subcommand("score", "Mean log bigram probability of each pair's tags");
  score->add_option("--bigrams", bigrams, "Bigram table")->required();
  score->add_option("--in", in, "Pairs")->capture_default_str();
  score->add_option("--out", out, "score TAB pair lines")->capture_default_str();
  score->callback([&] {
    const auto table = load_table(bigrams);
    const auto pairs = read_pairs_from(in);
    const auto scores = mb::score_pairs(pairs, table);
    with_output(out, [&](std::ostream& os) {
      char buf[32];
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9f", scores[i]);
        os << buf << '\t' << mb::format_pair(pairs[i]) << '\n';
      }
    });
  });

  // resample
  mb::ResampleConfig rc;
  auto* resample = app.add_subcommand("resample", "Draw pairs from score buckets with Zipf weights");
  resample->add_option("--bigrams", bigrams, "Bigram table")->required();
  resample->add_option("--in", in, "Pairs")->capture_default_str();
  resample->add_option("--out", out, "Output pairs")->capture_default_str();
  resample->add_option("--k", rc.k, "Buckets")->capture_default_str();
  resample->add_option("--s", rc.s, "Zipf exponent")->capture_default_str();
  resample->add_option("--n", rc.n, "Draws (0: input size)")->capture_default_str();
  resample->add_option("--seed", rc.seed, "Draw seed")->capture_default_str();
  resample->callback([&] {
    const auto table = load_table(bigrams);
    const auto pairs = read_pairs_from(in);
    mb::ResampleStats st;
    const auto drawn = mb::resample(pairs, table, rc, &st);
    with_output(out, [&](std::ostream& os) { mb::write_pairs(os, drawn); });
    std::cerr << drawn.size() << " drawn, " << st.empty_buckets << " empty buckets\n";
  });

  // train
  mb::neural::Hyper hyper;
  std::string train_path, dev_path, model_path;
  auto* train = app.add_subcommand("train", "Train the attentional encoder-decoder");
  train->add_option("--train", train_path, "Training pairs")->required();
  train->add_option("--dev", dev_path, "Validation pairs")->required();
  train->add_option("--model", model_path, "Model output")->required();
  train->add_option("--seed", hyper.seed, "Training seed")->capture_default_str();
  add_hyper(train, hyper);
  train->callback([&] {
    const auto tr = mb::load_pairs(train_path);
    const auto dv = mb::load_pairs(dev_path);
    mb::neural::TrainLog log;
    const auto model = mb::neural::train(tr, dv, hyper, &log);
    for (const auto& e : log.validations) {
      std::fprintf(stderr, "epoch %zu updates %zu train %.4f dev %.4f%s\n", e.epoch, e.updates, e.train_loss,
                   e.dev_cross_entropy, e.improved ? " *" : "");
    }
    mb::neural::save_model(model, model_path);
  });

  // analyze
  std::size_t beam = 12;
  bool use_fst = false;
  auto* analyze = app.add_subcommand("analyze", "Analyse words with a trained model or the analyzer");
  analyze->add_option("--grammar", grammar, "Grammar file (grapheme inventory)")->required();
  analyze->add_option("--model", model_path, "Trained model");
  analyze->add_flag("--fst", use_fst, "Use the finite-state analyzer, first analysis");
  analyze->add_option("--beam", beam, "Beam size")->capture_default_str();
  analyze->add_option("--in", in, "One word per line")->capture_default_str();
  analyze->add_option("--out", out, "Predictions, one line per word (empty: no analysis)")
      ->capture_default_str();
  analyze->callback([&] {
    if (use_fst == !model_path.empty()) throw mb::ConfigError("give exactly one of --model and --fst");
    const auto spec = mb::load_grammar(grammar);
    std::vector<std::vector<std::string>> sources;
    for (const auto& l : read_lines(in)) sources.push_back(mb::graphemize(spec, l));
    std::vector<mb::Prediction> preds;
    if (use_fst) {
      preds = mb::fst_predict(mb::compile_grammar(spec).analyzer, sources);
    } else {
      const auto model = mb::neural::load_model(model_path);
      for (auto& p : mb::neural::predict_batch(model, sources, beam)) preds.emplace_back(std::move(p));
    }
    with_output(out, [&](std::ostream& os) {
      for (const auto& p : preds) os << (p ? mb::strings::join(*p, " ") : "") << '\n';
    });
  });

  // evaluate
  std::string gold_path, pred_path, name = "model", kv_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a gold file");
  evaluate->add_option("--grammar", grammar, "Grammar file (syncretism rules)")->required();
  evaluate->add_option("--gold", gold_path, "Gold file")->required();
  evaluate->add_option("--pred", pred_path, "Predictions from analyze")->required();
  evaluate->add_option("--name", name, "Row name")->capture_default_str();
  evaluate->add_option("--kv", kv_path, "Also write key=value metrics here");
  evaluate->callback([&] {
    const auto spec = mb::load_grammar(grammar);
    const auto gold = mb::load_gold(gold_path);
    std::ifstream is(pred_path);
    if (!is) throw mb::ConfigError("cannot open '" + pred_path + "'");
    std::vector<mb::Prediction> preds;
    for (std::string line; std::getline(is, line);) {
      auto toks = mb::strings::split_ws(line);
      preds.push_back(toks.empty() ? mb::Prediction{} : mb::Prediction{std::move(toks)});
    }
    const std::vector<mb::ReportRow> rows{
        {name, mb::evaluate(preds, gold, spec.syncretism), mb::redup_metrics(preds, gold)}};
    mb::write_report_text(std::cout, rows);
    if (!kv_path.empty()) with_output(kv_path, [&](std::ostream& os) { mb::write_report_kv(os, rows); });
  });

  // experiment
  mb::PipelineConfig pc;
  auto* exp = app.add_subcommand("experiment", "Run the full four-analyzer comparison");
  exp->add_option("--grammar", pc.grammar, "Grammar file")->required();
  exp->add_option("--out", pc.output_dir, "Output directory")->required();
  exp->add_option("--generate-n", pc.generate_n, "Random walks for training data")->capture_default_str();
  exp->add_option("--ratios", pc.ratios, "train dev test ratios")->capture_default_str();
  exp->add_option("--halluc-fraction", pc.halluc_fraction, "Share of pairs to reduplicate")->capture_default_str();
  exp->add_option("--distro-k", pc.distro_k, "Resampling buckets")->capture_default_str();
  exp->add_option("--distro-s", pc.distro_s, "Resampling Zipf exponent")->capture_default_str();
  exp->add_option("--distro-n", pc.distro_n, "Resampled size (0: training size)")->capture_default_str();
  exp->add_option("--corpus-n", pc.corpus_n, "Words in the synthetic corpus")->capture_default_str();
  exp->add_option("--corpus-skew", pc.corpus_skew, "Zipf exponent of corpus choices")->capture_default_str();
  exp->add_option("--test-in-vocab", pc.test.in_vocab, "Held-out in-vocabulary test forms")->capture_default_str();
  exp->add_option("--test-oov-root", pc.test.oov_root, "Test forms with unknown roots")->capture_default_str();
  exp->add_option("--test-oov-nominal", pc.test.oov_nominal, "Test forms with unknown nominals")
      ->capture_default_str();
  exp->add_option("--test-redup", pc.test.redup, "Reduplicated test forms")->capture_default_str();
  exp->add_option("--seed-generate", pc.seeds.generate)->capture_default_str();
  exp->add_option("--seed-split", pc.seeds.split)->capture_default_str();
  exp->add_option("--seed-test", pc.seeds.test)->capture_default_str();
  exp->add_option("--seed-corpus", pc.seeds.corpus)->capture_default_str();
  exp->add_option("--seed-halluc", pc.seeds.halluc)->capture_default_str();
  exp->add_option("--seed-resample", pc.seeds.resample)->capture_default_str();
  exp->add_option("--seed-train", pc.seeds.train)->capture_default_str();
  add_hyper(exp, pc.hyper);
  exp->callback([&] {
    const auto result = mb::run_experiment(pc, &std::cerr);
    std::cout << result.report_text;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const mb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mb::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
