#include "qreason/evalkit/trace.hpp"

#include <sstream>

#include "qreason/error.hpp"

namespace qreason::eval {

using ojson = nlohmann::ordered_json;

TraceRecord emit_trace(const data::Example& example, const deduction::ReasoningTrace& trace,
                       const answer::AnswerPrediction& prediction) {
  TraceRecord r;
  r.id = trace.id;
  r.type = std::string(to_string(trace.type));
  r.cause = trace.cause.text;
  r.effect = trace.effect.text;
  r.polarity = std::string(to_string(trace.polarity));
  if (trace.world) r.world = trace.world->text;
  if (trace.world1) r.world1 = trace.world1->text;
  if (trace.world2) r.world2 = trace.world2->text;
  if (trace.value) r.value = std::string(to_string(*trace.value));
  if (trace.comparison) r.comparison = std::string(to_string(*trace.comparison));
  r.synthetic_text = trace.synthetic.text;
  r.chosen_answer = prediction.index;
  r.chosen_option = example.instance.options[static_cast<std::size_t>(prediction.index)];
  r.gold_answer = example.instance.answer;
  if (r.gold_answer) r.correct = *r.gold_answer == r.chosen_answer;
  for (Head h : kAllHeads) {
    if (is_span_head(h) || !trace.outputs.has(h)) continue;
    const auto& p = trace.outputs[h];
    r.distributions[std::string(head_name(h))] = ojson::array({p[0], p[1]});
  }
  return r;
}

std::string serialize_trace(const TraceRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["type"] = r.type;
  j["cause"] = r.cause;
  j["effect"] = r.effect;
  j["polarity"] = r.polarity;
  auto opt = [&](const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
  };
  opt("world", r.world);
  opt("world1", r.world1);
  opt("world2", r.world2);
  opt("value", r.value);
  opt("comparison", r.comparison);
  j["synthetic_text"] = r.synthetic_text;
  j["chosen_answer"] = r.chosen_answer;
  j["chosen_option"] = r.chosen_option;
  if (r.gold_answer) j["gold_answer"] = *r.gold_answer;
  if (r.correct) j["correct"] = *r.correct;
  j["distributions"] = r.distributions;
  return j.dump();
}

TraceRecord parse_trace(std::string_view line) {
  try {
    const ojson j = ojson::parse(line);
    TraceRecord r;
    r.id = j.at("id").get<std::string>();
    r.type = j.at("type").get<std::string>();
    r.cause = j.at("cause").get<std::string>();
    r.effect = j.at("effect").get<std::string>();
    r.polarity = j.at("polarity").get<std::string>();
    auto opt = [&](const char* key, std::optional<std::string>& v) {
      if (j.contains(key)) v = j[key].get<std::string>();
    };
    opt("world", r.world);
    opt("world1", r.world1);
    opt("world2", r.world2);
    opt("value", r.value);
    opt("comparison", r.comparison);
    r.synthetic_text = j.at("synthetic_text").get<std::string>();
    r.chosen_answer = j.at("chosen_answer").get<int>();
    r.chosen_option = j.at("chosen_option").get<std::string>();
    if (j.contains("gold_answer")) r.gold_answer = j["gold_answer"].get<int>();
    if (j.contains("correct")) r.correct = j["correct"].get<bool>();
    if (j.contains("distributions")) r.distributions = j["distributions"];
    return r;
  } catch (const ojson::exception& e) {
    throw InvalidInput(std::string("parse_trace: ") + e.what());
  }
}

std::string format_trace(const TraceRecord& r) {
  std::ostringstream os;
  os << "[" << r.id << "]\n";
  os << "  Type:        " << r.type << "\n";
  os << "  Cause:       " << r.cause << "\n";
  os << "  Effect:      " << r.effect << "\n";
  os << "  Polarity:    " << r.polarity << "\n";
  if (r.world) os << "  World:       " << *r.world << "\n";
  if (r.world1) os << "  World 1:     " << *r.world1 << "\n";
  if (r.world2) os << "  World 2:     " << *r.world2 << "\n";
  if (r.value) os << "  Value:       " << *r.value << "\n";
  if (r.comparison) os << "  Comparison:  world1 " << *r.comparison << " world2\n";
  os << "  Deduction:   " << r.synthetic_text << "\n";
  os << "  Answer:      (" << static_cast<char>('A' + r.chosen_answer) << ") " << r.chosen_option;
  if (r.correct) os << (*r.correct ? "  [correct]" : "  [wrong]");
  os << "\n";
  return os.str();
}

}  // namespace qreason::eval
