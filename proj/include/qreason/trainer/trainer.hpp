#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreason/answerer/answerer.hpp"
#include "qreason/datakit/instance.hpp"
#include "qreason/deduction/chain.hpp"
#include "qreason/heads/model.hpp"

namespace qreason::train {

struct LossWeights {
  std::array<double, kHeadCount> alpha{};

  LossWeights();  // 0.1 for span heads, 0.2 for binary heads
  double operator[](Head h) const { return alpha[index(h)]; }
  double& operator[](Head h) { return alpha[index(h)]; }
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 20;
  int accumulation = 1;
  std::uint64_t seed = 17;
  heads::HeadSet enabled = heads::all_heads();  // per-head loss toggles
  LossWeights weights;
  double threshold = deduction::kDefaultThreshold;
  int patience = 0;  // epochs without dev improvement before stopping; 0 disables
  double word_dropout = 0.1;  // chance a training token is replaced by <unk>

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// Fields present in `j` override `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
// Comma-separated head names; each listed head's loss is switched off.
heads::HeadSet parse_ablation(const std::string& list);

// Heads whose loss term is live for these labels.
heads::HeadSet active_heads(const data::Labels& labels, const LossWeights& weights, heads::HeadSet enabled);

// -sum_y alpha_y gamma_y ytilde^T log y over the live heads; a constant zero
// when none are live.
template <typename T>
diff::Var<T> reason_loss(const heads::HeadVars<T>& outputs, const data::Labels& labels, const LossWeights& weights,
                         heads::HeadSet enabled = heads::all_heads());

// -[y log p + (1 - y) log(1 - p)] for a 1 x 1 probability.
template <typename T>
diff::Var<T> answer_loss(const diff::Var<T>& probability, int label);

// Mean over the two options of one instance.
template <typename T>
diff::Var<T> instance_answer_loss(const diff::Var<T>& p0, const diff::Var<T>& p1, int answer);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double dev_metric = 0;
  nlohmann::json dev_report;
  bool best = false;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_metric = -1;
  std::uint64_t log_clamps = 0;

  // One JSON object per epoch.
  std::string log_jsonl() const;
};

using Progress = std::function<void(const EpochRecord&)>;

text::Vocab build_reasoning_vocab(std::span<const data::Example> examples);
text::Vocab build_answer_vocab(std::span<const data::Example> examples);

// Restores the parameters of the best dev epoch before returning.
template <typename T>
TrainResult train_reasoning(heads::ReasoningModel<T>& model, std::span<const data::Example> train,
                            std::span<const data::Example> dev, const TrainConfig& config,
                            const Progress& progress = {});

enum class AnswerContext { GoldSynthetic, ModelTraces, Knowledge };

std::string_view to_string(AnswerContext c);
std::optional<AnswerContext> parse_answer_context(std::string_view s);

struct AnswerTrainOptions {
  AnswerContext context = AnswerContext::GoldSynthetic;
  const deduction::Reasoner* reasoner = nullptr;  // ModelTraces only
  double threshold = deduction::kDefaultThreshold;
};

// Text that stands in for the knowledge when scoring options.
std::string answer_context(const data::Example& example, const AnswerTrainOptions& options);

template <typename T>
TrainResult train_answerer(answer::AnswerModel<T>& model, std::span<const data::Example> train,
                           std::span<const data::Example> dev, const TrainConfig& config,
                           const AnswerTrainOptions& options = {}, const Progress& progress = {});

extern template diff::Var<float> reason_loss(const heads::HeadVars<float>&, const data::Labels&, const LossWeights&,
                                             heads::HeadSet);
extern template diff::Var<double> reason_loss(const heads::HeadVars<double>&, const data::Labels&, const LossWeights&,
                                              heads::HeadSet);
extern template diff::Var<float> answer_loss(const diff::Var<float>&, int);
extern template diff::Var<double> answer_loss(const diff::Var<double>&, int);
extern template diff::Var<float> instance_answer_loss(const diff::Var<float>&, const diff::Var<float>&, int);
extern template diff::Var<double> instance_answer_loss(const diff::Var<double>&, const diff::Var<double>&, int);
extern template TrainResult train_reasoning(heads::ReasoningModel<float>&, std::span<const data::Example>,
                                            std::span<const data::Example>, const TrainConfig&, const Progress&);
extern template TrainResult train_reasoning(heads::ReasoningModel<double>&, std::span<const data::Example>,
                                            std::span<const data::Example>, const TrainConfig&, const Progress&);
extern template TrainResult train_answerer(answer::AnswerModel<float>&, std::span<const data::Example>,
                                           std::span<const data::Example>, const TrainConfig&,
                                           const AnswerTrainOptions&, const Progress&);
extern template TrainResult train_answerer(answer::AnswerModel<double>&, std::span<const data::Example>,
                                           std::span<const data::Example>, const TrainConfig&,
                                           const AnswerTrainOptions&, const Progress&);

}  // namespace qreason::train
