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

#include "morphboot/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "morphboot/datagen.hpp"
#include "morphboot/error.hpp"
#include "morphboot/strings.hpp"

namespace morphboot {
namespace {

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::map<std::string, std::size_t> tag_counts(const std::vector<std::string>& tokens) {
  std::map<std::string, std::size_t> m;
  std::vector<std::string> tags;
  try {
    tags = target_tags(tokens);
  } catch (const TokenizationError&) {
    // A malformed prediction contributes no tags, only misses.
  }
  for (auto& t : tags) ++m[t];
  return m;
}

bool has_tag(const std::vector<std::string>& tokens, const std::string& tag) {
  for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
    if (tokens[i] == "[" && tokens[i + 1] == tag && tokens[i + 2] == "]") return true;
  }
  return false;
}

}  // namespace

std::string to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::kReduplication: return "Reduplication";
    case ErrorClass::kTamInflection: return "TAM Inflection";
    case ErrorClass::kOovRoot: return "OOV root";
    case ErrorClass::kOovIncNominals: return "OOV inc. nominals";
    case ErrorClass::kAlternation: return "Alternation";
  }
  return "?";
}

ErrorClass parse_error_class(const std::string& text) {
  for (ErrorClass c : kAllErrorClasses) {
    if (to_string(c) == text) return c;
  }
  throw FormatError("unknown error class '" + text + "'");
}

bool is_correct(const std::vector<std::string>& prediction, const GoldItem& gold,
                std::span<const SyncretismRule> rules) {
  if (prediction == gold.analysis) return true;
  const auto variants = syncretism_expand(gold.analysis, rules, gold.syncretism_class);
  return std::binary_search(variants.begin(), variants.end(), prediction);
}

EvalReport evaluate(std::span<const Prediction> preds, std::span<const GoldItem> golds,
                    std::span<const SyncretismRule> rules, Exec exec) {
  if (preds.size() != golds.size()) {
    throw InputError("evaluate: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(golds.size()) + " gold items");
  }
  const std::size_t n = golds.size();
  std::vector<char> correct(n, 0);
  parallel_for(n, exec, [&](std::size_t i) {
    correct[i] = preds[i] && is_correct(*preds[i], golds[i], rules) ? 1 : 0;
  });

  EvalReport r;
  r.n = n;
  std::map<std::string, TagScore> tags;
  std::map<ErrorClass, ClassScore> classes;
  for (std::size_t i = 0; i < n; ++i) {
    r.analyzed += preds[i] ? 1 : 0;
    r.correct += correct[i];
    if (golds[i].error_class) {
      ClassScore& c = classes[*golds[i].error_class];
      c.error_class = *golds[i].error_class;
      ++c.n;
      c.correct += correct[i];
    }
    // A correct syncretic variant is scored as if it were the gold itself.
    const auto gold_tags = tag_counts(correct[i] ? *preds[i] : golds[i].analysis);
    const auto pred_tags = preds[i] ? tag_counts(*preds[i]) : std::map<std::string, std::size_t>{};
    for (const auto& [t, g] : gold_tags) {
      const auto it = pred_tags.find(t);
      const std::size_t p = it == pred_tags.end() ? 0 : it->second;
      TagScore& s = tags[t];
      s.tp += std::min(p, g);
      s.fn += g - std::min(p, g);
    }
    for (const auto& [t, p] : pred_tags) {
      const auto it = gold_tags.find(t);
      const std::size_t g = it == gold_tags.end() ? 0 : it->second;
      tags[t].fp += p - std::min(p, g);
    }
  }
  r.coverage = pct(r.analyzed, n);
  r.accuracy = pct(r.correct, n);
  r.precision = pct(r.correct, r.analyzed);
  for (auto& [name, s] : tags) {
    s.tag = name;
    s.precision = pct(s.tp, s.tp + s.fp);
    s.recall = pct(s.tp, s.tp + s.fn);
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    r.macro_precision += s.precision;
    r.macro_recall += s.recall;
    r.macro_f1 += s.f1;
    r.tags.push_back(s);
  }
  if (!r.tags.empty()) {
    const double k = static_cast<double>(r.tags.size());
    r.macro_precision /= k;
    r.macro_recall /= k;
    r.macro_f1 /= k;
  }
  for (ErrorClass c : kAllErrorClasses) {
    const auto it = classes.find(c);
    if (it == classes.end()) continue;
    it->second.accuracy = pct(it->second.correct, it->second.n);
    r.classes.push_back(it->second);
  }
  return r;
}

RedupMetrics redup_metrics(std::span<const Prediction> preds, std::span<const GoldItem> golds,
                           const std::string& tag) {
  if (preds.size() != golds.size()) throw InputError("redup_metrics: length mismatch");
  RedupMetrics m;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool g = has_tag(golds[i].analysis, tag);
    const bool p = preds[i] && has_tag(*preds[i], tag);
    m.gold += g ? 1 : 0;
    m.predicted += p ? 1 : 0;
    m.hits += g && p ? 1 : 0;
  }
  m.recall = pct(m.hits, m.gold);
  m.precision = pct(m.hits, m.predicted);
  return m;
}

std::string format_gold(const GoldItem& item) {
  std::string s = item.surface + '\t' + strings::join(item.analysis, " ");
  if (item.error_class || item.syncretism_class) {
    s += '\t';
    if (item.error_class) s += to_string(*item.error_class);
  }
  if (item.syncretism_class) s += '\t' + *item.syncretism_class;
  return s;
}

GoldItem parse_gold(const std::string& line) {
  const auto f = strings::split(line, '\t');
  if (f.size() < 2 || f.size() > 4) throw FormatError("gold line needs 2 to 4 fields: '" + line + "'");
  GoldItem g;
  g.surface = std::string(strings::trim(f[0]));
  g.analysis = strings::split_ws(f[1]);
  if (g.surface.empty() || g.analysis.empty()) throw FormatError("empty gold field in '" + line + "'");
  if (f.size() > 2 && !strings::trim(f[2]).empty()) g.error_class = parse_error_class(std::string(strings::trim(f[2])));
  if (f.size() > 3 && !strings::trim(f[3]).empty()) g.syncretism_class = std::string(strings::trim(f[3]));
  target_tags(g.analysis);  // validates the tokenisation
  return g;
}

void write_gold(std::ostream& os, std::span<const GoldItem> items) {
  for (const auto& g : items) os << format_gold(g) << '\n';
}

std::vector<GoldItem> read_gold(std::istream& is) {
  std::vector<GoldItem> out;
  std::string line;
  while (std::getline(is, line)) {
    if (strings::trim(line).empty() || line[0] == '#') continue;
    out.push_back(parse_gold(line));
  }
  return out;
}

void save_gold(const std::string& path, std::span<const GoldItem> items) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  write_gold(os, items);
}

std::vector<GoldItem> load_gold(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open gold file '" + path + "'");
  return read_gold(is);
}

void write_report_text(std::ostream& os, std::span<const ReportRow> rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %6s %6s %6s %7s %7s %7s %7s %7s\n", "model", "acc", "cov",
                "prec", "macroP", "macroR", "macroF1", "redupR", "redupP");
  os << buf;
  for (const auto& row : rows) {
    const EvalReport& r = row.report;
    std::snprintf(buf, sizeof buf, "%-24s %6.1f %6.1f %6.1f %7.1f %7.1f %7.1f %7.1f %7.1f\n",
                  row.name.c_str(), r.accuracy, r.coverage, r.precision, r.macro_precision,
                  r.macro_recall, r.macro_f1, row.redup.recall, row.redup.precision);
    os << buf;
  }
  if (rows.empty()) return;
  os << "\naccuracy by error class\n";
  std::snprintf(buf, sizeof buf, "%-24s", "model");
  os << buf;
  for (const auto& c : rows[0].report.classes) {
    std::snprintf(buf, sizeof buf, " %18s", (to_string(c.error_class) + " (" + std::to_string(c.n) + ")").c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-24s", row.name.c_str());
    os << buf;
    for (const auto& c : row.report.classes) {
      std::snprintf(buf, sizeof buf, " %18.1f", c.accuracy);
      os << buf;
    }
    os << '\n';
  }
}

void write_report_kv(std::ostream& os, std::span<const ReportRow> rows) {
  char buf[256];
  auto kv = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    os << key << '=' << buf << '\n';
  };
  for (const auto& row : rows) {
    const EvalReport& r = row.report;
    const std::string p = row.name + '.';
    os << p << "n=" << r.n << '\n' << p << "analyzed=" << r.analyzed << '\n' << p << "correct=" << r.correct << '\n';
    kv(p + "accuracy", r.accuracy);
    kv(p + "coverage", r.coverage);
    kv(p + "precision", r.precision);
    kv(p + "macro_precision", r.macro_precision);
    kv(p + "macro_recall", r.macro_recall);
    kv(p + "macro_f1", r.macro_f1);
    kv(p + "redup_recall", row.redup.recall);
    kv(p + "redup_precision", row.redup.precision);
    for (const auto& c : r.classes) {
      std::string name = to_string(c.error_class);
      std::replace(name.begin(), name.end(), ' ', '_');
      kv(p + "class." + name, c.accuracy);
    }
    for (const auto& t : r.tags) kv(p + "tag." + t.tag + ".f1", t.f1);
  }
}

}  // namespace morphboot
