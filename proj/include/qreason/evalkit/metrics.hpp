#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreason/answerer/answerer.hpp"
#include "qreason/datakit/instance.hpp"
#include "qreason/deduction/chain.hpp"

namespace qreason::eval {

// Token-position F1 between two inclusive spans of the same segment.
double token_f1(const deduction::Span& pred, const deduction::Span& gold);
double token_f1(std::size_t pred_start, std::size_t pred_end, std::size_t gold_start, std::size_t gold_end);

// 1 whenever any overlap exists.
int fuzzy_f1(double f1);

struct HeadScore {
  std::size_t count = 0;  // instances with this label available
  double f1 = 0;          // span heads
  double fuzzy_f1 = 0;    // span heads
  double accuracy = 0;    // binary heads: argmax accuracy; span heads: exact match

  bool present() const { return count > 0; }
};

struct ModuleReport {
  std::array<HeadScore, kHeadCount> heads{};
  double threshold = deduction::kDefaultThreshold;
  std::size_t instances = 0;

  const HeadScore& operator[](Head h) const { return heads[index(h)]; }
  // Mean of span F1 and binary accuracy over heads with labels.
  double average() const;
  std::string table() const;
  nlohmann::json to_json() const;
};

std::vector<heads::HeadOutputs> collect_outputs(const deduction::Reasoner& reasoner,
                                                std::span<const data::Example> examples);

ModuleReport module_eval(std::span<const data::Example> examples, std::span<const heads::HeadOutputs> outputs,
                         double threshold);
ModuleReport module_eval(const deduction::Reasoner& reasoner, std::span<const data::Example> examples,
                         double threshold);

struct ThresholdChoice {
  double threshold = deduction::kDefaultThreshold;
  double span_f1 = 0;  // mean F1 over span heads at that threshold
  std::vector<std::pair<double, double>> grid;
};

std::vector<double> default_threshold_grid();  // 0.05, 0.10, ..., 0.50
// Highest mean span F1; ties keep the smaller threshold.
ThresholdChoice tune_threshold(std::span<const data::Example> examples, std::span<const heads::HeadOutputs> outputs,
                               std::span<const double> grid);

struct QaOutcome {
  std::string id;
  int predicted = 0;
  bool correct = false;
  bool failed = false;
  bool tie = false;
  std::string error;
};

struct QaResult {
  std::vector<QaOutcome> outcomes;
  std::size_t correct = 0;
  std::size_t failures = 0;
  std::size_t ties = 0;

  double accuracy() const { return outcomes.empty() ? 0.0 : static_cast<double>(correct) / outcomes.size(); }
};

// Full pipeline: type -> chain -> deduction -> synthetic text -> option scores.
// A failing instance counts as wrong and the run continues.
QaResult qa_accuracy(const deduction::Reasoner& reasoner, const answer::OptionScorer& scorer,
                     std::span<const data::Example> examples, double threshold);

// Options scored against the raw knowledge text instead of a synthetic text.
QaResult knowledge_baseline(const answer::OptionScorer& scorer, std::span<const data::Example> examples);

// Options scored against the gold synthetic text.
QaResult gold_text_accuracy(const answer::OptionScorer& scorer, std::span<const data::Example> examples);

// Uniform random scores seeded per instance id.
class RandomScorer : public answer::OptionScorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  std::array<double, 2> score(const data::Example& example, const std::string& context) const override;

 private:
  std::uint64_t seed_;
};

QaResult random_baseline(std::span<const data::Example> examples, std::uint64_t seed);

}  // namespace qreason::eval
