#include "qreason/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace qreason {

namespace {

constexpr std::array<std::string_view, kHeadCount> kHeadNames = {
    "cause", "effect", "world", "world1", "world2", "polarity", "value", "comparison", "type"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view head_name(Head h) { return kHeadNames[index(h)]; }

std::optional<Head> parse_head(std::string_view name) {
  const std::string n = lower(name);
  for (Head h : kAllHeads) {
    if (head_name(h) == n) return h;
  }
  return std::nullopt;
}

std::string_view to_string(Polarity p) { return p == Polarity::Positive ? "+" : "-"; }
std::string_view to_string(ValueChange v) { return v == ValueChange::Increase ? "↑" : "↓"; }
std::string_view to_string(Ordering o) { return o == Ordering::World1Greater ? ">" : "<"; }
std::string_view to_string(Chain c) { return c == Chain::Prediction ? "Prediction" : "Comparison"; }
std::string_view to_string(Direction d) { return d == Direction::More ? "more" : "less"; }
std::string_view to_string(Segment s) { return s == Segment::Knowledge ? "knowledge" : "statement"; }

std::optional<Polarity> parse_polarity(std::string_view s) {
  const std::string v = lower(s);
  if (v == "+" || v == "positive" || v == "pos") return Polarity::Positive;
  if (v == "-" || v == "negative" || v == "neg") return Polarity::Negative;
  return std::nullopt;
}

std::optional<ValueChange> parse_value(std::string_view s) {
  const std::string v = lower(s);
  if (v == "↑" || v == "up" || v == "increase") return ValueChange::Increase;
  if (v == "↓" || v == "down" || v == "decrease") return ValueChange::Decrease;
  return std::nullopt;
}

std::optional<Ordering> parse_ordering(std::string_view s) {
  if (s == ">") return Ordering::World1Greater;
  if (s == "<") return Ordering::World1Less;
  return std::nullopt;
}

std::optional<Chain> parse_chain(std::string_view s) {
  const std::string v = lower(s);
  if (v == "prediction") return Chain::Prediction;
  if (v == "comparison") return Chain::Comparison;
  return std::nullopt;
}

}  // namespace qreason
