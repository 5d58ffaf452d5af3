#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qreason/datakit/instance.hpp"
#include "qreason/deduction/chain.hpp"
#include "qreason/textenc/encoder.hpp"

namespace qreason::answer {

inline constexpr const char* kSeparator = ";";

struct AnswerConfig {
  text::EncoderConfig encoder;
  int text_max = 48;  // synthetic text segment
  int qa_max = 64;    // question ; option segment
  std::uint64_t seed = 11;
};

std::string config_to_json(const AnswerConfig& config);
AnswerConfig config_from_json(const std::string& json);

// <s> text </s> </s> question ; option </s> <pad>...
// The option is kept whole; overflow is trimmed from the question first.
text::AssembledPair assemble_answer_input(std::span<const std::string> synthetic, std::span<const std::string> question,
                                          std::span<const std::string> option, const text::Vocab& vocab, int text_max,
                                          int qa_max);

// Separate encoder plus a linear scorer on the first position.
template <typename T>
class AnswerModel {
 public:
  AnswerModel(const AnswerConfig& config, text::Vocab vocab);
  AnswerModel(const AnswerModel&) = delete;
  AnswerModel& operator=(const AnswerModel&) = delete;

  text::AssembledPair assemble(const std::string& synthetic, const std::string& question,
                               const std::string& option) const;
  // Pre-squash score, 1 x 1.
  diff::Var<T> logit(const text::AssembledPair& input) const;
  diff::Var<T> probability(const text::AssembledPair& input) const;
  double score(const std::string& synthetic, const std::string& question, const std::string& option) const;

  const AnswerConfig& config() const { return config_; }
  const text::Vocab& vocab() const { return vocab_; }
  diff::ParamSet<T>& params() { return params_; }
  const diff::ParamSet<T>& params() const { return params_; }

  static constexpr const char* kScoreWeight = "score.weight";
  static constexpr const char* kScoreBias = "score.bias";

  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<AnswerModel> load(const std::filesystem::path& dir);

 private:
  AnswerConfig config_;
  text::Vocab vocab_;
  diff::ParamSet<T> params_;
  std::unique_ptr<text::Encoder<T>> encoder_;
  diff::Var<T> weight_, bias_;
};

extern template class AnswerModel<float>;
extern template class AnswerModel<double>;

// Probability of each option given the text that stands in for the knowledge.
class OptionScorer {
 public:
  virtual ~OptionScorer() = default;
  virtual std::array<double, 2> score(const data::Example& example, const std::string& context) const = 0;
};

template <typename T>
class ModelScorer : public OptionScorer {
 public:
  explicit ModelScorer(const AnswerModel<T>& model) : model_(model) {}
  std::array<double, 2> score(const data::Example& example, const std::string& context) const override;

 private:
  const AnswerModel<T>& model_;
};

extern template class ModelScorer<float>;
extern template class ModelScorer<double>;

struct AnswerPrediction {
  int index = 0;
  std::array<double, 2> scores{};
  bool tie = false;
};

// Argmax with ties going to option 0.
AnswerPrediction choose(std::array<double, 2> scores);

AnswerPrediction predict_answer(const data::Example& example, const deduction::ReasoningTrace& trace,
                                const OptionScorer& scorer);

std::size_t tie_count();
void reset_tie_count();

}  // namespace qreason::answer
