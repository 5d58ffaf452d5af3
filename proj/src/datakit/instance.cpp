#include "qreason/datakit/instance.hpp"

#include "qreason/error.hpp"

namespace qreason::data {

namespace {
const std::optional<TokenSpan> kNoSpan;
}

bool Labels::available(Head head) const {
  switch (head) {
    case Head::Cause: return cause.has_value();
    case Head::Effect: return effect.has_value();
    case Head::World: return world.has_value();
    case Head::World1: return world1.has_value();
    case Head::World2: return world2.has_value();
    case Head::Polarity: return polarity.has_value();
    case Head::Value: return value.has_value();
    case Head::Comparison: return comparison.has_value();
    case Head::Type: return type.has_value();
  }
  return false;
}

const std::optional<TokenSpan>& Labels::span(Head head) const {
  switch (head) {
    case Head::Cause: return cause;
    case Head::Effect: return effect;
    case Head::World: return world;
    case Head::World1: return world1;
    case Head::World2: return world2;
    default: return kNoSpan;
  }
}

std::optional<TokenSpan>& Labels::span(Head head) {
  switch (head) {
    case Head::Cause: return cause;
    case Head::Effect: return effect;
    case Head::World: return world;
    case Head::World1: return world1;
    case Head::World2: return world2;
    default: throw InvalidInput("Labels::span: not a span head");
  }
}

std::optional<int> Labels::class_index(Head head) const {
  switch (head) {
    case Head::Polarity: return polarity ? std::optional<int>(static_cast<int>(*polarity)) : std::nullopt;
    case Head::Value: return value ? std::optional<int>(static_cast<int>(*value)) : std::nullopt;
    case Head::Comparison: return comparison ? std::optional<int>(static_cast<int>(*comparison)) : std::nullopt;
    case Head::Type: return type ? std::optional<int>(static_cast<int>(*type)) : std::nullopt;
    default: return std::nullopt;
  }
}

std::vector<double> Labels::span_target(Head head, std::size_t length) const {
  std::vector<double> y(length, 0.0);
  const auto& s = span(head);
  if (!s) return y;
  for (int i = s->start; i <= s->end && static_cast<std::size_t>(i) < length; ++i) y[static_cast<std::size_t>(i)] = 1.0;
  return y;
}

std::string statement_text(const Instance& instance) {
  return instance.question + " A) " + instance.options[0] + " B) " + instance.options[1];
}

Example prepare(Instance instance) {
  Example ex;
  ex.instance = std::move(instance);
  ex.statement = statement_text(ex.instance);
  ex.knowledge_tokens = text::tokenize(ex.instance.knowledge);
  ex.statement_tokens = text::tokenize(ex.statement);
  return ex;
}

}  // namespace qreason::data
