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

// Scoring of analyzers against gold analyses.
//
// An item is correct when the predicted token sequence is one of the
// syncretism-equivalent variants of the gold analysis. Items without a
// prediction count against coverage. Tag-level scores compare multisets of
// bracketed tags per item and are macro-averaged over every tag that occurs
// in gold or prediction; tags absent from both never enter the average.

#ifndef MORPHBOOT_EVAL_HPP_
#define MORPHBOOT_EVAL_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphboot/exec.hpp"
#include "morphboot/syncretism.hpp"

namespace morphboot {

enum class ErrorClass { kReduplication, kTamInflection, kOovRoot, kOovIncNominals, kAlternation };

inline constexpr ErrorClass kAllErrorClasses[] = {ErrorClass::kReduplication, ErrorClass::kTamInflection,
                                                  ErrorClass::kOovRoot, ErrorClass::kOovIncNominals,
                                                  ErrorClass::kAlternation};

std::string to_string(ErrorClass c);
ErrorClass parse_error_class(const std::string& text);  // throws FormatError

struct GoldItem {
  std::string surface;
  std::vector<std::string> analysis;  // target tokens
  std::optional<ErrorClass> error_class;
  // Names the one syncretism rule that applies to this item. Unset means
  // every rule of the grammar may apply.
  std::optional<std::string> syncretism_class;

  bool operator==(const GoldItem&) const = default;
};

using Prediction = std::optional<std::vector<std::string>>;

struct TagScore {
  std::string tag;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;  // percent
};

struct ClassScore {
  ErrorClass error_class;
  std::size_t n = 0, correct = 0;
  double accuracy = 0;  // percent
};

struct EvalReport {
  std::size_t n = 0, analyzed = 0, correct = 0;
  double accuracy = 0, coverage = 0, precision = 0;  // percent
  std::vector<TagScore> tags;                        // sorted by tag
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  std::vector<ClassScore> classes;  // only classes present in gold
};

bool is_correct(const std::vector<std::string>& prediction, const GoldItem& gold,
                std::span<const SyncretismRule> rules);

// Throws InputError when the two lists differ in length.
EvalReport evaluate(std::span<const Prediction> preds, std::span<const GoldItem> golds,
                    std::span<const SyncretismRule> rules, Exec exec = Exec::kParallel);

struct RedupMetrics {
  std::size_t gold = 0, predicted = 0, hits = 0;
  double recall = 0, precision = 0;  // percent; 0 when undefined
};

RedupMetrics redup_metrics(std::span<const Prediction> preds, std::span<const GoldItem> golds,
                           const std::string& tag = "REDUP");

// surface TAB gold tokens [TAB error class [TAB syncretism class]]
std::string format_gold(const GoldItem& item);
GoldItem parse_gold(const std::string& line);
void write_gold(std::ostream& os, std::span<const GoldItem> items);
std::vector<GoldItem> read_gold(std::istream& is);
void save_gold(const std::string& path, std::span<const GoldItem> items);
std::vector<GoldItem> load_gold(const std::string& path);

struct ReportRow {
  std::string name;
  EvalReport report;
  RedupMetrics redup;
};

// Aligned plain-text table, one decimal.
void write_report_text(std::ostream& os, std::span<const ReportRow> rows);
// key=value lines, e.g. "Base.accuracy=91.250000".
void write_report_kv(std::ostream& os, std::span<const ReportRow> rows);

}  // namespace morphboot

#endif  // MORPHBOOT_EVAL_HPP_
