#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace qreason {

enum class Segment : std::uint8_t { Knowledge, Statement };

// Index 0 of every two-way distribution is the first enumerator.
enum class Polarity : std::uint8_t { Positive, Negative };
enum class ValueChange : std::uint8_t { Increase, Decrease };
enum class Ordering : std::uint8_t { World1Greater, World1Less };
enum class Chain : std::uint8_t { Prediction, Comparison };
enum class Direction : std::uint8_t { More, Less };

enum class Head : std::uint8_t { Cause, Effect, World, World1, World2, Polarity, Value, Comparison, Type };
inline constexpr std::size_t kHeadCount = 9;
inline constexpr std::array<Head, kHeadCount> kAllHeads = {Head::Cause,    Head::Effect, Head::World,
                                                           Head::World1,   Head::World2, Head::Polarity,
                                                           Head::Value,    Head::Comparison, Head::Type};

constexpr std::size_t index(Head h) { return static_cast<std::size_t>(h); }

constexpr bool is_span_head(Head h) {
  return h == Head::Cause || h == Head::Effect || h == Head::World || h == Head::World1 || h == Head::World2;
}

constexpr Segment segment_of(Head h) {
  return (h == Head::Cause || h == Head::Effect) ? Segment::Knowledge : Segment::Statement;
}

std::string_view head_name(Head h);
std::optional<Head> parse_head(std::string_view name);

std::string_view to_string(Polarity p);      // "+" / "-"
std::string_view to_string(ValueChange v);   // "↑" / "↓"
std::string_view to_string(Ordering o);      // ">" / "<"
std::string_view to_string(Chain c);         // "Prediction" / "Comparison"
std::string_view to_string(Direction d);     // "more" / "less"
std::string_view to_string(Segment s);

std::optional<Polarity> parse_polarity(std::string_view s);
std::optional<ValueChange> parse_value(std::string_view s);
std::optional<Ordering> parse_ordering(std::string_view s);
std::optional<Chain> parse_chain(std::string_view s);

}  // namespace qreason
