#pragma once

#include <optional>
#include <string>

#include "qreason/datakit/instance.hpp"
#include "qreason/deduction/deduce.hpp"
#include "qreason/heads/model.hpp"

namespace qreason::deduction {

// Produces all nine head distributions for one example from a single encoding.
class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual heads::HeadOutputs reason(const data::Example& example) const = 0;
};

template <typename T>
class ModelReasoner : public Reasoner {
 public:
  explicit ModelReasoner(const heads::ReasoningModel<T>& model) : model_(model) {}
  heads::HeadOutputs reason(const data::Example& example) const override;

 private:
  const heads::ReasoningModel<T>& model_;
};

extern template class ModelReasoner<float>;
extern template class ModelReasoner<double>;

// Emits the gold labels as distributions: spans uniform over their gold
// tokens, binary heads one-hot. Unlabelled heads are uniform.
class OracleReasoner : public Reasoner {
 public:
  heads::HeadOutputs reason(const data::Example& example) const override;
};

heads::HeadOutputs oracle_outputs(const data::Example& example);

struct ReasoningTrace {
  std::string id;
  Chain type = Chain::Prediction;
  bool forced = false;
  heads::HeadOutputs outputs;
  Span cause, effect;
  std::optional<Span> world, world1, world2;
  Polarity polarity = Polarity::Positive;
  std::optional<ValueChange> value;
  std::optional<Ordering> comparison;
  Direction direction = Direction::More;
  SyntheticText synthetic;
};

constexpr double kDefaultThreshold = 0.15;

// Chain selection by the type classifier unless `forced` is given.
ReasoningTrace run_chain(const data::Example& example, const Reasoner& reasoner, double threshold = kDefaultThreshold,
                         std::optional<Chain> forced = std::nullopt);

// Same, from precomputed head outputs.
ReasoningTrace run_chain(const data::Example& example, heads::HeadOutputs outputs, double threshold = kDefaultThreshold,
                         std::optional<Chain> forced = std::nullopt);

// Slot-filled text built directly from the gold labels, if they cover the chain.
std::optional<SyntheticText> gold_synthetic(const data::Example& example);

// Span readout for one head of a trace, restricted to the example's tokens.
Span read_span(const data::Example& example, const heads::HeadOutputs& outputs, Head head, double threshold);

}  // namespace qreason::deduction
