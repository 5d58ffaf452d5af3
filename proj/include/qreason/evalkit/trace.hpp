#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qreason/answerer/answerer.hpp"
#include "qreason/datakit/instance.hpp"
#include "qreason/deduction/chain.hpp"

namespace qreason::eval {

struct TraceRecord {
  std::string id;
  std::string type;
  std::string cause;
  std::string effect;
  std::string polarity;
  std::optional<std::string> world, world1, world2;
  std::optional<std::string> value, comparison;
  std::string synthetic_text;
  int chosen_answer = 0;
  std::string chosen_option;
  std::optional<int> gold_answer;
  std::optional<bool> correct;
  nlohmann::ordered_json distributions = nlohmann::ordered_json::object();  // binary heads

  bool operator==(const TraceRecord&) const = default;
};

TraceRecord emit_trace(const data::Example& example, const deduction::ReasoningTrace& trace,
                       const answer::AnswerPrediction& prediction);

// One JSON line, fixed field order.
std::string serialize_trace(const TraceRecord& record);
TraceRecord parse_trace(std::string_view line);

// Multi-line human-readable rendering.
std::string format_trace(const TraceRecord& record);

}  // namespace qreason::eval
