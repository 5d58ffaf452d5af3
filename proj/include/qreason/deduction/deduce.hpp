#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "qreason/textenc/tokenizer.hpp"
#include "qreason/types.hpp"

namespace qreason::deduction {

struct Span {
  std::size_t start = 0;  // inclusive token index
  std::size_t end = 0;    // inclusive token index
  Segment segment = Segment::Knowledge;
  std::string text;

  std::size_t length() const { return end - start + 1; }
  bool operator==(const Span&) const = default;
};

// Peak = argmax (lowest index on ties); grow left and right while each next
// neighbour's probability exceeds the threshold. Text is left empty.
Span attention_to_span(std::span<const double> probs, double threshold, Segment segment);

// Fills `text` from the source's character offsets.
Span with_text(Span span, std::string_view source, std::span<const text::Token> tokens);

Direction deduce_prediction(Polarity polarity, ValueChange value);
Direction deduce_comparison(Polarity polarity, Ordering ordering);

struct SlotRecord {
  Chain chain = Chain::Prediction;
  std::string world;   // prediction world, or world 1
  std::string world2;  // comparison only
  std::string effect;
  Direction direction = Direction::More;

  bool operator==(const SlotRecord&) const = default;
};

struct SyntheticText {
  std::string text;
  SlotRecord slots;
};

//   prediction: "<world> will cause <more|less> <effect>."
//   comparison: "<world1> will cause <more|less> <effect> than <world2>."
SyntheticText synthesize_text(const SlotRecord& slots);

// First class wins ties.
inline std::size_t argmax2(double first, double second) { return second > first ? 1 : 0; }

}  // namespace qreason::deduction
