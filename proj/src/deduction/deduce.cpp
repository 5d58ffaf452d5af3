#include "qreason/deduction/deduce.hpp"

#include <cmath>

#include "qreason/error.hpp"

namespace qreason::deduction {

Span attention_to_span(std::span<const double> probs, double threshold, Segment segment) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("attention_to_span: threshold must lie in (0, 1)");
  if (probs.empty()) throw InvalidInput("attention_to_span: empty attention vector");
  std::size_t peak = 0;
  bool any = false;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]) || probs[i] < 0.0) throw InvalidInput("attention_to_span: invalid probability");
    any = any || probs[i] > 0.0;
    if (probs[i] > probs[peak]) peak = i;
  }
  if (!any) throw InvalidInput("attention_to_span: all-zero attention vector");
  Span span;
  span.segment = segment;
  span.start = peak;
  span.end = peak;
  while (span.start > 0 && probs[span.start - 1] > threshold) --span.start;
  while (span.end + 1 < probs.size() && probs[span.end + 1] > threshold) ++span.end;
  return span;
}

Span with_text(Span span, std::string_view source, std::span<const text::Token> tokens) {
  span.text = text::detokenize(source, tokens, span.start, span.end);
  return span;
}

Direction deduce_prediction(Polarity polarity, ValueChange value) {
  const bool same = (polarity == Polarity::Positive) == (value == ValueChange::Increase);
  return same ? Direction::More : Direction::Less;
}

Direction deduce_comparison(Polarity polarity, Ordering ordering) {
  const bool same = (polarity == Polarity::Positive) == (ordering == Ordering::World1Greater);
  return same ? Direction::More : Direction::Less;
}

SyntheticText synthesize_text(const SlotRecord& slots) {
  if (slots.world.empty() || slots.effect.empty()) throw InvalidInput("synthesize_text: empty slot");
  SlotRecord kept = slots;
  if (kept.chain == Chain::Prediction) kept.world2.clear();
  std::string text = slots.world + " will cause " + std::string(to_string(slots.direction)) + " " + slots.effect;
  if (slots.chain == Chain::Comparison) {
    if (slots.world2.empty()) throw InvalidInput("synthesize_text: empty slot");
    text += " than " + slots.world2;
  }
  text += ".";
  return {std::move(text), std::move(kept)};
}

}  // namespace qreason::deduction
