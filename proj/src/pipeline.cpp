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

#include "morphboot/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "morphboot/distro.hpp"
#include "morphboot/error.hpp"
#include "morphboot/halluc.hpp"
#include "morphboot/strings.hpp"

namespace morphboot {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  os << content;
  if (!os.flush()) throw ConfigError("write failed for '" + p.string() + "'");
}

// One content-addressed stage directory. The key text is everything the
// stage output depends on; its hash names the directory.
class Stage {
 public:
  Stage(const fs::path& root, std::string name, std::string key)
      : name_(std::move(name)), key_(std::move(key)), hash_(fnv1a(key_)),
        dir_(root / "stages" / (name_ + "-" + hex64(hash_))) {}

  const std::string& name() const { return name_; }
  std::uint64_t hash() const { return hash_; }
  fs::path file(const std::string& f) const { return dir_ / f; }
  bool complete() const { return fs::exists(dir_ / "COMPLETE"); }

  // Wipes anything left by an interrupted run.
  void begin() const {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_file(dir_ / "key.txt", key_ + "\n");
  }
  void finish() const { write_file(dir_ / "COMPLETE", ""); }

 private:
  std::string name_;
  std::string key_;
  std::uint64_t hash_;
  fs::path dir_;
};

class Logger {
 public:
  explicit Logger(std::ostream* os) : os_(os) {}
  template <typename... A>
  void operator()(const A&... parts) const {
    if (!os_) return;
    ((*os_ << parts), ...);
    *os_ << std::endl;
  }

 private:
  std::ostream* os_;
};

template <typename F>
auto guarded(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

// Loads the stage when complete, otherwise computes and persists it.
template <typename T, typename Load, typename Compute, typename Save>
T cached(const Stage& st, const Logger& log, Load&& load, Compute&& compute, Save&& save) {
  return guarded(st.name(), [&]() -> T {
    if (st.complete()) {
      log("[", st.name(), "] reusing ", hex64(st.hash()));
      return load();
    }
    const auto t0 = std::chrono::steady_clock::now();
    T value = compute();
    st.begin();
    save(value);
    st.finish();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fs", secs);
    log("[", st.name(), "] done in ", buf);
    return value;
  });
}

void save_predictions(const fs::path& p, const std::vector<Prediction>& preds) {
  std::string s;
  for (const auto& pr : preds) {
    if (pr) s += strings::join(*pr, " ");
    s += '\n';
  }
  write_file(p, s);
}

std::vector<Prediction> load_predictions(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("cannot open '" + p.string() + "'");
  std::vector<Prediction> out;
  for (std::string line; std::getline(is, line);) {
    auto toks = strings::split_ws(line);
    out.push_back(toks.empty() ? Prediction{} : Prediction{std::move(toks)});
  }
  return out;
}

void save_words(const fs::path& p, const std::vector<std::vector<std::string>>& words) {
  std::string s;
  for (const auto& w : words) s += strings::join(w, " ") + '\n';
  write_file(p, s);
}

std::vector<std::vector<std::string>> load_words(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("cannot open '" + p.string() + "'");
  std::vector<std::vector<std::string>> out;
  for (std::string line; std::getline(is, line);) out.push_back(strings::split_ws(line));
  return out;
}

std::string join_surface(const std::vector<std::string>& graphemes) { return strings::join(graphemes, ""); }

struct Corpus {
  std::vector<std::vector<std::string>> words;
  BigramTable table;
};

}  // namespace

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical(const neural::Hyper& h) {
  std::ostringstream os;
  os << "src_vocab=" << h.src_vocab << " trg_vocab=" << h.trg_vocab << " embed=" << h.embed
     << " hidden=" << h.hidden << " dropout_rnn=" << num(h.dropout_rnn) << " dropout_src=" << num(h.dropout_src)
     << " dropout_trg=" << num(h.dropout_trg) << " patience=" << h.patience << " beam=" << h.beam
     << " max_epochs=" << h.max_epochs << " batch_size=" << h.batch_size << " max_updates=" << h.max_updates
     << " valid_every=" << h.valid_every << " learning_rate=" << num(h.learning_rate)
     << " clip_norm=" << num(h.clip_norm) << " ema_decay=" << num(h.ema_decay) << " seed=" << h.seed;
  return os.str();
}

void PipelineConfig::validate() const {
  if (grammar.empty()) throw ConfigError("no grammar file given");
  if (!fs::is_regular_file(grammar)) throw ConfigError("grammar file '" + grammar + "' does not exist");
  if (output_dir.empty()) throw ConfigError("no output directory given");
  if (generate_n == 0) throw ConfigError("generation count must be positive");
  split_sizes(1, ratios);  // throws on bad ratios
  if (!(halluc_fraction > 0 && halluc_fraction <= 1)) throw ConfigError("hallucination fraction must lie in (0, 1]");
  if (distro_k == 0) throw ConfigError("distro k must be at least 1");
  if (!(distro_s >= 0)) throw ConfigError("distro s must be non-negative");
  if (corpus_n == 0) throw ConfigError("corpus size must be positive");
  if (!(corpus_skew >= 0)) throw ConfigError("corpus skew must be non-negative");
  if (test.in_vocab + test.oov_root + test.oov_nominal + test.redup == 0) throw ConfigError("empty test set");
  hyper.validate();
}

std::vector<std::vector<std::string>> synthesize_corpus(const GrammarSpec& spec, const CompiledGrammar& full,
                                                        std::size_t n, double skew, std::uint64_t seed) {
  std::vector<const Slot*> slots;
  for (const auto& s : spec.slots) slots.push_back(&s);
  std::stable_sort(slots.begin(), slots.end(), [](const Slot* a, const Slot* b) { return a->index < b->index; });

  // Per slot: the distinct choices in file order, absence first when optional.
  struct Choice {
    std::vector<std::string> options;  // "" is absence
    std::discrete_distribution<std::size_t> pick;
  };
  std::vector<Choice> choices;
  for (const Slot* s : slots) {
    Choice c;
    if (s->optional) c.options.push_back("");
    for (const auto& e : s->entries) {
      const std::string opt = s->is_root() ? e.form : tag_symbol(e.tag);
      if (std::find(c.options.begin(), c.options.end(), opt) == c.options.end()) c.options.push_back(opt);
    }
    const auto w = zipf_weights(c.options.size(), skew);
    c.pick = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    choices.push_back(std::move(c));
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> words;
  words.reserve(n);
  const SymbolTable& symbols = full.analyzer.symbols();
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = spec.category.empty() ? "" : tag_symbol(spec.category);
    for (auto& c : choices) text += c.options[c.pick(rng)];
    const auto analysis = parse_analysis(spec, text);
    auto outs = fst::apply(full.analyzer, analysis, Direction::kDown);
    if (outs.empty()) throw GenerationError("grammar does not realise '" + text + "'");
    std::vector<std::vector<std::string>> surfaces;
    for (const auto& o : outs) surfaces.push_back(symbols.decode(o));
    std::sort(surfaces.begin(), surfaces.end());
    // Entries sharing a tag are realised uniformly.
    words.push_back(surfaces[std::uniform_int_distribution<std::size_t>(0, surfaces.size() - 1)(rng)]);
  }
  return words;
}

std::vector<Prediction> fst_predict(const Transducer& analyzer, std::span<const std::vector<std::string>> sources,
                                    Exec exec) {
  std::vector<Prediction> out(sources.size());
  parallel_for(sources.size(), exec, [&](std::size_t i) {
    std::vector<std::vector<std::string>> all;
    for (const auto& ids : fst::apply(analyzer, sources[i], Direction::kUp)) {
      all.push_back(tokenize_target(analyzer.symbols().decode(ids)));
    }
    if (!all.empty()) out[i] = *std::min_element(all.begin(), all.end());
  });
  return out;
}

ExperimentResult run_experiment(const PipelineConfig& config, std::ostream* log_stream) {
  config.validate();
  const Logger log(log_stream);
  const fs::path root(config.output_dir);
  guarded("setup", [&] { fs::create_directories(root); });

  // Grammar: both analyzers, keyed by file content rather than path.
  const std::string grammar_text = guarded("grammar", [&] { return read_file(config.grammar); });
  const std::string grammar_hash = hex64(fnv1a(grammar_text));
  struct Grammars {
    GrammarSpec spec;
    CompiledGrammar incomplete, full;
  };
  const Grammars g = guarded("grammar", [&] {
    GrammarSpec spec = parse_grammar_text(grammar_text);
    validate(spec);
    CompiledGrammar inc = compile_grammar(spec);
    CompiledGrammar full = compile_grammar(spec, {.include_held_out = true});
    return Grammars{std::move(spec), std::move(inc), std::move(full)};
  });
  log("[grammar] ", g.spec.name, " ", grammar_hash);
  const Transducer& analyzer = g.incomplete.analyzer;

  // Data: generation from the incomplete analyzer and the split.
  const Stage data_stage(root, "data",
                         "grammar=" + grammar_hash + " n=" + std::to_string(config.generate_n) +
                             " seed=" + std::to_string(config.seeds.generate) + " split_seed=" +
                             std::to_string(config.seeds.split) + " ratios=" + num(config.ratios[0]) + "," +
                             num(config.ratios[1]) + "," + num(config.ratios[2]));
  const DatasetSplit data = cached<DatasetSplit>(
      data_stage, log,
      [&] {
        return DatasetSplit{load_pairs(data_stage.file("train.tsv")), load_pairs(data_stage.file("dev.tsv")),
                            load_pairs(data_stage.file("test.tsv"))};
      },
      [&] {
        GenerateStats st;
        const auto pairs = generate_pairs(analyzer, config.generate_n, config.seeds.generate, {}, &st);
        log("[data] ", st.raw, " walks, ", st.unique, " unique pairs");
        return split(pairs, config.ratios, config.seeds.split);
      },
      [&](const DatasetSplit& d) {
        save_pairs(data_stage.file("train.tsv").string(), d.train);
        save_pairs(data_stage.file("dev.tsv").string(), d.dev);
        save_pairs(data_stage.file("test.tsv").string(), d.test);
      });
  log("[data] train ", data.train.size(), ", dev ", data.dev.size(), ", test pool ", data.test.size());

  // Test set.
  const TestComposition& tc = config.test;
  const Stage test_stage(root, "test",
                         "data=" + hex64(data_stage.hash()) + " seed=" + std::to_string(config.seeds.test) +
                             " in_vocab=" + std::to_string(tc.in_vocab) + " oov_root=" +
                             std::to_string(tc.oov_root) + " oov_nominal=" + std::to_string(tc.oov_nominal) +
                             " redup=" + std::to_string(tc.redup));
  const std::vector<GoldItem> gold = cached<std::vector<GoldItem>>(
      test_stage, log, [&] { return load_gold(test_stage.file("gold.tsv").string()); },
      [&] {
        std::vector<GoldItem> items;
        if (data.test.size() < tc.in_vocab + tc.redup) {
          throw Error("test pool of " + std::to_string(data.test.size()) + " pairs is too small");
        }
        auto add = [&](const TrainingPair& p, std::optional<ErrorClass> c) {
          items.push_back(GoldItem{join_surface(p.source), p.target, c, std::nullopt});
        };
        for (std::size_t i = 0; i < tc.in_vocab; ++i) add(data.test[i], std::nullopt);

        // Reduplicated forms of held-out test pairs; hallucinate keeps input order.
        const std::span<const TrainingPair> rest(data.test.begin() + static_cast<std::ptrdiff_t>(tc.in_vocab),
                                                 data.test.end());
        // Homographs the analyzer can parse some other way are skipped: every
        // reduplicated and OOV test form lies outside its coverage.
        const auto redup = hallucinate(rest, {.fraction = 1.0, .seed = derive_seed(config.seeds.test, 1)},
                                       g.spec.redup_templates(), g.spec.phon_classes());
        std::size_t taken = 0;
        for (std::size_t i = 0; i < redup.size() && taken < tc.redup; ++i) {
          if (!fst::apply(analyzer, redup[i].source, Direction::kUp).empty()) continue;
          add(redup[i], ErrorClass::kReduplication);
          ++taken;
        }
        if (taken < tc.redup) throw Error("only " + std::to_string(taken) + " reduplicated test forms");

        // Forms of the full grammar the incomplete analyzer cannot analyse.
        std::set<std::string> held_out_roots;
        for (const auto& e : g.spec.root_slot().entries) {
          if (e.held_out) held_out_roots.insert(e.form);
        }
        std::set<std::string> seen;
        for (const auto& it : items) seen.insert(it.surface);
        std::size_t roots = 0, nominals = 0;
        const std::size_t want = tc.oov_root + tc.oov_nominal;
        for (std::uint64_t round = 0; (roots < tc.oov_root || nominals < tc.oov_nominal) && round < 16; ++round) {
          const auto walks = generate_pairs(g.full.analyzer, 20 * std::max<std::size_t>(want, 10),
                                            derive_seed(config.seeds.test, 100 + round));
          std::vector<char> oov(walks.size());
          parallel_for(walks.size(), Exec::kParallel,
                       [&](std::size_t i) { oov[i] = fst::apply(analyzer, walks[i].source, Direction::kUp).empty(); });
          for (std::size_t i = 0; i < walks.size(); ++i) {
            if (!oov[i] || !seen.insert(join_surface(walks[i].source)).second) continue;
            const bool root_oov = held_out_roots.count(strings::join(isolate_root(walks[i]).root, "")) > 0;
            if (root_oov && roots < tc.oov_root) {
              add(walks[i], ErrorClass::kOovRoot);
              ++roots;
            } else if (!root_oov && nominals < tc.oov_nominal) {
              add(walks[i], ErrorClass::kOovIncNominals);
              ++nominals;
            }
          }
        }
        if (roots < tc.oov_root || nominals < tc.oov_nominal) {
          throw Error("found only " + std::to_string(roots) + " OOV-root and " + std::to_string(nominals) +
                      " OOV-nominal forms");
        }
        return items;
      },
      [&](const std::vector<GoldItem>& items) { save_gold(test_stage.file("gold.tsv").string(), items); });

  const std::vector<std::vector<std::string>> sources = guarded("test", [&] {
    std::vector<std::vector<std::string>> out;
    for (const auto& it : gold) out.push_back(graphemize(g.spec, it.surface));
    return out;
  });
  log("[test] ", gold.size(), " items");

  // Tagged corpus and bigram table.
  const Stage corpus_stage(root, "corpus",
                           "grammar=" + grammar_hash + " n=" + std::to_string(config.corpus_n) +
                               " skew=" + num(config.corpus_skew) + " seed=" + std::to_string(config.seeds.corpus));
  const Corpus corpus = cached<Corpus>(
      corpus_stage, log,
      [&] {
        std::ifstream is(corpus_stage.file("bigrams.tsv"));
        if (!is) throw ConfigError("missing bigram table");
        return Corpus{load_words(corpus_stage.file("corpus.txt")), BigramTable::read(is)};
      },
      [&] {
        Corpus c;
        c.words = synthesize_corpus(g.spec, g.full, config.corpus_n, config.corpus_skew, config.seeds.corpus);
        TagCorpusStats st;
        const auto seqs = tag_corpus(analyzer, c.words, {}, &st);
        log("[corpus] ", st.words, " words, ", st.analysed, " analysed, ", st.sequences, " tag sequences");
        c.table = estimate_bigrams(seqs);
        return c;
      },
      [&](const Corpus& c) {
        save_words(corpus_stage.file("corpus.txt"), c.words);
        std::ostringstream os;
        c.table.write(os);
        write_file(corpus_stage.file("bigrams.tsv"), os.str());
      });

  // Training sets.
  const HallucConfig hc{.fraction = config.halluc_fraction, .seed = config.seeds.halluc};
  const std::string halluc_key = " fraction=" + num(config.halluc_fraction) + " seed=" + std::to_string(config.seeds.halluc);
  auto pair_stage = [&](const Stage& st, auto&& compute) {
    return cached<std::vector<TrainingPair>>(
        st, log, [&] { return load_pairs(st.file("train.tsv").string()); }, compute,
        [&](const std::vector<TrainingPair>& p) { save_pairs(st.file("train.tsv").string(), p); });
  };
  auto with_halluc = [&](std::vector<TrainingPair> base) {
    HallucStats hs;
    const auto extra = hallucinate(base, hc, g.spec.redup_templates(), g.spec.phon_classes(), &hs);
    log("[halluc] ", hs.sampled, " sampled, ", hs.produced, " produced");
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  };
  const Stage halluc_stage(root, "halluc", "data=" + hex64(data_stage.hash()) + halluc_key);
  const auto train_halluc = pair_stage(halluc_stage, [&] { return with_halluc(data.train); });
  const Stage resample_stage(root, "resample",
                             "data=" + hex64(data_stage.hash()) + " corpus=" + hex64(corpus_stage.hash()) +
                                 " k=" + std::to_string(config.distro_k) + " s=" + num(config.distro_s) +
                                 " n=" + std::to_string(config.distro_n) +
                                 " seed=" + std::to_string(config.seeds.resample) + halluc_key);
  const auto train_resample = pair_stage(resample_stage, [&] {
    ResampleStats rs;
    auto drawn = resample(data.train, corpus.table,
                          {.k = config.distro_k, .s = config.distro_s, .n = config.distro_n,
                           .seed = config.seeds.resample},
                          &rs);
    log("[resample] ", drawn.size(), " drawn, ", rs.empty_buckets, " empty buckets");
    return with_halluc(std::move(drawn));
  });

  // Models and their predictions.
  neural::Hyper hyper = config.hyper;
  hyper.seed = config.seeds.train;
  struct Variant {
    std::string name;
    const std::vector<TrainingPair>* train;
    std::uint64_t data_hash;
  };
  const std::vector<Variant> variants{{"Base", &data.train, data_stage.hash()},
                                      {"Base+halluc", &train_halluc, halluc_stage.hash()},
                                      {"Base+halluc+resample", &train_resample, resample_stage.hash()}};

  std::vector<ReportRow> rows;
  auto score_row = [&](const std::string& name, const std::vector<Prediction>& preds) {
    ReportRow r;
    r.name = name;
    r.report = evaluate(preds, gold, g.spec.syncretism);
    r.redup = redup_metrics(preds, gold);
    rows.push_back(std::move(r));
  };

  const Stage fst_stage(root, "predict-FST", "grammar=" + grammar_hash + " test=" + hex64(test_stage.hash()));
  score_row("FST", cached<std::vector<Prediction>>(
                       fst_stage, log, [&] { return load_predictions(fst_stage.file("predictions.txt")); },
                       [&] { return fst_predict(analyzer, sources); },
                       [&](const std::vector<Prediction>& p) { save_predictions(fst_stage.file("predictions.txt"), p); }));

  for (const auto& v : variants) {
    const Stage model_stage(root, "model-" + v.name, "data=" + hex64(v.data_hash) + " dev=" +
                                                         hex64(data_stage.hash()) + " " + canonical(hyper));
    struct Trained {
      neural::Model<float> model;
      std::string log;
    };
    const auto trained = cached<Trained>(
        model_stage, log,
        [&] {
          return Trained{neural::load_model(model_stage.file("model.txt").string()),
                         read_file(model_stage.file("train_log.tsv"))};
        },
        [&] {
          log("[", model_stage.name(), "] training on ", v.train->size(), " pairs");
          neural::TrainLog tl;
          Trained t{neural::train(*v.train, data.dev, hyper, &tl), ""};
          const auto& best = tl.validations[tl.best_validation];
          log("[", model_stage.name(), "] ", tl.validations.size(), " validations, best dev CE ",
              num(best.dev_cross_entropy), " at epoch ", best.epoch);
          std::ostringstream os;
          os << "epoch\tupdates\ttrain_loss\tdev_ce\timproved\n";
          for (const auto& e : tl.validations) {
            os << e.epoch << '\t' << e.updates << '\t' << num(e.train_loss) << '\t' << num(e.dev_cross_entropy) << '\t'
               << (e.improved ? 1 : 0) << '\n';
          }
          t.log = os.str();
          return t;
        },
        [&](const Trained& t) {
          neural::save_model(t.model, model_stage.file("model.txt").string());
          write_file(model_stage.file("train_log.tsv"), t.log);
        });
    const neural::Model<float>& model = trained.model;

    const Stage pred_stage(root, "predict-" + v.name,
                           "model=" + hex64(model_stage.hash()) + " test=" + hex64(test_stage.hash()));
    score_row(v.name, cached<std::vector<Prediction>>(
                          pred_stage, log, [&] { return load_predictions(pred_stage.file("predictions.txt")); },
                          [&] {
                            const auto out = neural::predict_batch(model, sources, hyper.beam);
                            return std::vector<Prediction>(out.begin(), out.end());
                          },
                          [&](const std::vector<Prediction>& p) {
                            save_predictions(pred_stage.file("predictions.txt"), p);
                          }));
  }

  // Report.
  ExperimentResult result;
  result.rows = rows;
  return guarded("report", [&] {
    std::map<std::string, std::size_t> comp;
    for (const auto& it : gold) ++comp[it.error_class ? to_string(*it.error_class) : "in-vocabulary"];
    std::ostringstream text;
    text << "grammar " << g.spec.name << ", " << gold.size() << " test items:";
    for (const auto& [k, n] : comp) text << ' ' << k << ' ' << n << ';';
    text << "\ntraining pairs: Base " << data.train.size() << ", Base+halluc " << train_halluc.size()
         << ", Base+halluc+resample " << train_resample.size() << "\n\n";
    write_report_text(text, rows);
    std::ostringstream kv;
    kv << "test.n=" << gold.size() << '\n';
    write_report_kv(kv, rows);
    result.report_text = text.str();
    result.report_kv = kv.str();
    write_file(root / "report.txt", result.report_text);
    write_file(root / "report.kv", result.report_kv);
    log("[report] written to ", (root / "report.txt").string());
    return result;
  });
}

}  // namespace morphboot
