#ifndef XLNER_EVAL_HPP_
#define XLNER_EVAL_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xlner/corpus.hpp"

namespace xlner {

struct TypeScore {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_count = 0;
  std::size_t pred_count = 0;
  std::size_t correct = 0;
};

struct EvalReport {
  double precision = 0.0;  // percent, [0, 100]
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_count = 0;
  std::size_t pred_count = 0;
  std::size_t correct = 0;
  double token_accuracy = 0.0;  // percent
  std::map<std::string, TypeScore> per_type;
};

// Exact-span micro-averaged P/R/F1. Predictions are BIO-repaired before
// span extraction; gold must already be consistent.
EvalReport entity_f1(const Corpus& gold, const std::vector<std::vector<TagId>>& pred, const TagSet& tagset);

// f1 = 2pr / (p + r), with 0/0 -> 0.
double harmonic_f1(double precision, double recall);

// Half-up rounding to two decimals (magnitude rounded, sign kept).
double round2(double value);

// "+4.94", "-8.45", "+0.00".
std::string format_delta(double delta);

std::string format_report(const EvalReport& report);
std::string report_json(const EvalReport& report);

struct DeltaRow {
  std::string target;
  std::optional<std::string> source;
  double baseline_f1 = 0.0;
  double system_f1 = 0.0;

  double delta() const { return system_f1 - baseline_f1; }
};

// Aligned plain-text table; the sign of each delta is the +/- marker.
std::string delta_table(const std::vector<DeltaRow>& rows);
// One JSON record per line, all fields.
std::string delta_table_jsonl(const std::vector<DeltaRow>& rows);

}  // namespace xlner

#endif  // XLNER_EVAL_HPP_
