#include "xlner/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "xlner/error.hpp"

namespace xlner {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

}  // namespace

double harmonic_f1(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

double round2(double value) {
  // The 1e-9 nudge keeps values like 8.445 that land a hair below the
  // midpoint in binary from rounding down.
  const double magnitude = std::floor(std::fabs(value) * 100.0 + 0.5 + 1e-9) / 100.0;
  return std::signbit(value) ? -magnitude : magnitude;
}

std::string format_delta(double delta) {
  const double r = round2(delta);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%c%.2f", r < 0.0 ? '-' : '+', std::fabs(r));
  return buf;
}

EvalReport entity_f1(const Corpus& gold, const std::vector<std::vector<TagId>>& pred, const TagSet& tagset) {
  if (gold.size() != pred.size()) {
    fail(ErrorKind::kData,
         "gold has " + std::to_string(gold.size()) + " sentences, predictions " + std::to_string(pred.size()));
  }
  const auto& types = tagset.entity_types();
  std::vector<TypeScore> per(types.size());
  std::size_t tokens = 0, tokens_correct = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      fail(ErrorKind::kData, "sentence " + std::to_string(s) + ": gold/prediction length mismatch");
    }
    auto repaired = pred[s];
    repair_bio(repaired, tagset);
    for (std::size_t i = 0; i < repaired.size(); ++i) {
      ++tokens;
      if (repaired[i] == gold[s].tags[i]) ++tokens_correct;
    }
    const auto gold_spans = bio_spans(gold[s].tags, tagset);
    const auto pred_spans = bio_spans(repaired, tagset);
    for (const auto& g : gold_spans) ++per[static_cast<std::size_t>(g.type)].gold_count;
    for (const auto& p : pred_spans) ++per[static_cast<std::size_t>(p.type)].pred_count;
    // Both lists are sorted and non-overlapping: merge.
    std::size_t a = 0, b = 0;
    while (a < gold_spans.size() && b < pred_spans.size()) {
      if (gold_spans[a] == pred_spans[b]) {
        ++per[static_cast<std::size_t>(gold_spans[a].type)].correct;
        ++a, ++b;
      } else if (gold_spans[a] < pred_spans[b]) {
        ++a;
      } else {
        ++b;
      }
    }
  }
  EvalReport report;
  for (std::size_t t = 0; t < types.size(); ++t) {
    auto& ts = per[t];
    ts.precision = percent(ts.correct, ts.pred_count);
    ts.recall = percent(ts.correct, ts.gold_count);
    ts.f1 = harmonic_f1(ts.precision, ts.recall);
    report.gold_count += ts.gold_count;
    report.pred_count += ts.pred_count;
    report.correct += ts.correct;
    report.per_type[types[t]] = ts;
  }
  report.precision = percent(report.correct, report.pred_count);
  report.recall = percent(report.correct, report.gold_count);
  report.f1 = harmonic_f1(report.precision, report.recall);
  report.token_accuracy = percent(tokens_correct, tokens);
  return report;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %7s %7s %7s\n", "type", "precision", "recall", "f1", "gold",
                "pred", "correct");
  out << line;
  for (const auto& [name, t] : r.per_type) {
    std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %7zu %7zu %7zu\n", name.c_str(), fixed2(t.precision).c_str(),
                  fixed2(t.recall).c_str(), fixed2(t.f1).c_str(), t.gold_count, t.pred_count, t.correct);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %7zu %7zu %7zu\n", "overall", fixed2(r.precision).c_str(),
                fixed2(r.recall).c_str(), fixed2(r.f1).c_str(), r.gold_count, r.pred_count, r.correct);
  out << line;
  out << "token accuracy " << fixed2(r.token_accuracy) << "\n";
  return out.str();
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["gold_count"] = r.gold_count;
  j["pred_count"] = r.pred_count;
  j["correct"] = r.correct;
  j["token_accuracy"] = r.token_accuracy;
  auto& per = j["per_type"];
  per = nlohmann::ordered_json::object();
  for (const auto& [name, t] : r.per_type) {
    per[name] = {{"precision", t.precision}, {"recall", t.recall},         {"f1", t.f1},
                 {"gold_count", t.gold_count}, {"pred_count", t.pred_count}, {"correct", t.correct}};
  }
  return j.dump() + "\n";
}

std::string delta_table(const std::vector<DeltaRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-8s %10s %10s %9s\n", "target", "source", "baseline", "system", "delta");
  out << line;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%-8s %-8s %10s %10s %9s\n", row.target.c_str(),
                  row.source ? row.source->c_str() : "---", fixed2(row.baseline_f1).c_str(),
                  fixed2(row.system_f1).c_str(), format_delta(row.delta()).c_str());
    out << line;
  }
  return out.str();
}

std::string delta_table_jsonl(const std::vector<DeltaRow>& rows) {
  std::string out;
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["target"] = row.target;
    j["source"] = row.source ? nlohmann::ordered_json(*row.source) : nlohmann::ordered_json(nullptr);
    j["baseline_f1"] = row.baseline_f1;
    j["system_f1"] = row.system_f1;
    j["delta"] = row.delta();
    j["delta_display"] = format_delta(row.delta());
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace xlner
