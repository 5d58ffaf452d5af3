#include "qreason/datakit/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "qreason/error.hpp"

namespace qreason::data {

using nlohmann::json;

namespace {

const std::array<std::string_view, 8> kKnownFields = {
    "id", "para", "question", "options", "answer", "para_anno", "question_anno", "labels"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fail_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::string require_string(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string())
    throw RuntimeFailure(fail_prefix(line) + "missing string field '" + key + "'");
  return it->get<std::string>();
}

std::optional<int> parse_answer(const json& a) {
  if (a.is_number_integer()) {
    const auto v = a.get<long long>();
    if (v == 0 || v == 1) return static_cast<int>(v);
    return std::nullopt;
  }
  if (a.is_string()) {
    const std::string s = lower(a.get<std::string>());
    if (s == "a" || s == "0") return 0;
    if (s == "b" || s == "1") return 1;
  }
  return std::nullopt;
}

bool key_has_prefix(const json& obj, std::string_view prefix) {
  if (!obj.is_object()) return false;
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::string_view(it.key()).substr(0, prefix.size()) == prefix) return true;
  return false;
}

std::optional<TokenSpan> read_span(const json& v, const Example& ex, Segment seg, std::size_t line,
                                   std::size_t* warnings) {
  const auto& toks = ex.tokens(seg);
  if (v.is_object() && v.contains("start") && v.contains("end")) {
    if (!v["start"].is_number_integer() || !v["end"].is_number_integer())
      throw RuntimeFailure(fail_prefix(line) + "span bounds must be integers");
    TokenSpan s{v["start"].get<int>(), v["end"].get<int>()};
    if (s.start < 0 || s.end < s.start || static_cast<std::size_t>(s.end) >= toks.size())
      throw RuntimeFailure(fail_prefix(line) + "span out of range");
    return s;
  }
  std::string text;
  if (v.is_string()) text = v.get<std::string>();
  else if (v.is_object() && v.contains("text") && v["text"].is_string()) text = v["text"].get<std::string>();
  else throw RuntimeFailure(fail_prefix(line) + "span must be a string or {start, end}");
  auto s = align_annotation(toks, text);
  if (!s && warnings) ++*warnings;
  return s;
}

template <class E>
std::optional<E> read_enum(const json& labels, const char* key, std::optional<E> (*parse)(std::string_view),
                           std::size_t line) {
  auto it = labels.find(key);
  if (it == labels.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw RuntimeFailure(fail_prefix(line) + "label '" + key + "' must be a string");
  auto v = parse(it->get<std::string>());
  if (!v) throw RuntimeFailure(fail_prefix(line) + "unrecognised value for label '" + key + "'");
  return v;
}

std::string_view value_name(ValueChange v) { return v == ValueChange::Increase ? "increase" : "decrease"; }
std::string_view polarity_name(Polarity p) { return p == Polarity::Positive ? "+" : "-"; }

json span_json(const TokenSpan& s, const Example& ex, Segment seg) {
  return json{{"start", s.start},
              {"end", s.end},
              {"text", text::detokenize(ex.source(seg), ex.tokens(seg), static_cast<std::size_t>(s.start),
                                        static_cast<std::size_t>(s.end))}};
}

}  // namespace

bool is_correlation_keyword(std::string_view token) {
  static const std::array<std::string_view, 24> words = {
      "greater",   "more",     "less",      "fewer",    "higher",    "lower",    "larger",   "smaller",
      "bigger",    "increase", "increases", "increased", "increasing", "decrease", "decreases", "decreased",
      "decreasing", "rise",    "rises",     "fall",     "falls",     "up",       "down",     "reduced"};
  return std::find(words.begin(), words.end(), token) != words.end();
}

std::optional<int> parse_sign(const json& sign) {
  if (sign.is_number()) {
    const double v = sign.get<double>();
    if (v > 0) return 1;
    if (v < 0) return -1;
    return std::nullopt;
  }
  if (!sign.is_string()) return std::nullopt;
  const std::string s = lower(sign.get<std::string>());
  if (s == "more" || s == "+" || s == "1" || s == "+1" || s == "up" || s == "increase" || s == "higher") return 1;
  if (s == "less" || s == "-" || s == "-1" || s == "down" || s == "decrease" || s == "lower") return -1;
  return std::nullopt;
}

Supervision derive_supervision(const json& para_anno, const json& question_anno) {
  Supervision out;
  if (para_anno.is_object() && para_anno.contains("cause_dir_sign") && para_anno.contains("effect_dir_sign")) {
    const auto c = parse_sign(para_anno["cause_dir_sign"]);
    const auto e = parse_sign(para_anno["effect_dir_sign"]);
    if (c && e) out.polarity = (*c == *e) ? Polarity::Positive : Polarity::Negative;
  }
  if (question_anno.is_object()) {
    const bool comparison = key_has_prefix(question_anno, "more_effect") && key_has_prefix(question_anno, "less_effect");
    out.type = comparison ? Chain::Comparison : Chain::Prediction;
  }
  return out;
}

std::optional<TokenSpan> align_annotation(std::span<const text::Token> source, std::string_view annotation) {
  const auto needle = text::tokenize(annotation);
  if (needle.empty() || needle.size() > source.size()) return std::nullopt;
  std::vector<int> keywords;
  for (std::size_t i = 0; i < source.size(); ++i)
    if (is_correlation_keyword(source[i].text)) keywords.push_back(static_cast<int>(i));

  std::optional<TokenSpan> best;
  int best_distance = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i + needle.size() <= source.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size() && match; ++j) match = source[i + j].text == needle[j].text;
    if (!match) continue;
    const TokenSpan span{static_cast<int>(i), static_cast<int>(i + needle.size() - 1)};
    int distance = std::numeric_limits<int>::max() - 1;
    for (int k : keywords) {
      int d = 0;
      if (k < span.start) d = span.start - k;
      else if (k > span.end) d = k - span.end;
      else continue;  // keywords inside the annotation do not count
      distance = std::min(distance, d);
    }
    if (distance < best_distance) {
      best_distance = distance;
      best = span;
    }
  }
  return best;
}

Example parse_record(const json& rec, std::size_t line, std::size_t* warnings) {
  if (!rec.is_object()) throw RuntimeFailure(fail_prefix(line) + "record is not an object");
  Instance inst;
  inst.id = require_string(rec, "id", line);
  inst.knowledge = require_string(rec, "para", line);

  auto q = rec.find("question");
  if (q == rec.end()) throw RuntimeFailure(fail_prefix(line) + "missing field 'question'");
  if (q->is_string()) {
    inst.question = q->get<std::string>();
    auto o = rec.find("options");
    if (o == rec.end() || !o->is_array() || o->size() != 2 || !(*o)[0].is_string() || !(*o)[1].is_string())
      throw RuntimeFailure(fail_prefix(line) + "'options' must be an array of two strings");
    inst.options = {(*o)[0].get<std::string>(), (*o)[1].get<std::string>()};
  } else if (q->is_object()) {
    // QuaRTz layout: {"stem": ..., "choices": [{"text": ..., "label": "A"}, ...]}
    if (!q->contains("stem") || !(*q)["stem"].is_string())
      throw RuntimeFailure(fail_prefix(line) + "question object lacks 'stem'");
    inst.question = (*q)["stem"].get<std::string>();
    const auto& ch = (*q)["choices"];
    if (!ch.is_array() || ch.size() != 2) throw RuntimeFailure(fail_prefix(line) + "expected exactly two choices");
    for (int k = 0; k < 2; ++k) {
      if (!ch[k].is_object() || !ch[k].contains("text") || !ch[k]["text"].is_string())
        throw RuntimeFailure(fail_prefix(line) + "choice lacks 'text'");
      inst.options[static_cast<std::size_t>(k)] = ch[k]["text"].get<std::string>();
    }
  } else {
    throw RuntimeFailure(fail_prefix(line) + "'question' must be a string or object");
  }

  const json* answer = nullptr;
  if (rec.contains("answer")) answer = &rec["answer"];
  else if (rec.contains("answerKey")) answer = &rec["answerKey"];
  if (answer && !answer->is_null()) {
    inst.answer = parse_answer(*answer);
    if (!inst.answer) throw RuntimeFailure(fail_prefix(line) + "answer must be 0, 1, \"A\" or \"B\"");
  }

  Example ex = prepare(std::move(inst));
  ex.labels.answer = ex.instance.answer;

  for (auto it = rec.begin(); it != rec.end(); ++it) {
    const std::string& key = it.key();
    if (std::find(kKnownFields.begin(), kKnownFields.end(), key) == kKnownFields.end() &&
        !(key == "answerKey" && !rec.contains("answer")))
      ex.extra[key] = it.value();
  }

  if (rec.contains("para_anno") && !rec["para_anno"].is_null()) {
    ex.para_anno = rec["para_anno"];
    if (!ex.para_anno.is_object()) throw RuntimeFailure(fail_prefix(line) + "'para_anno' must be an object");
  }
  if (rec.contains("question_anno") && !rec["question_anno"].is_null()) {
    ex.question_anno = rec["question_anno"];
    if (!ex.question_anno.is_object()) throw RuntimeFailure(fail_prefix(line) + "'question_anno' must be an object");
  }

  const auto sup = derive_supervision(ex.para_anno, ex.question_anno);
  ex.labels.polarity = sup.polarity;
  ex.labels.type = sup.type;
  if (ex.para_anno.is_object()) {
    for (auto [key, head] : {std::pair{"cause_prop", Head::Cause}, std::pair{"effect_prop", Head::Effect}}) {
      auto it = ex.para_anno.find(key);
      if (it != ex.para_anno.end() && it->is_string())
        ex.labels.span(head) = read_span(*it, ex, Segment::Knowledge, line, warnings);
    }
  }

  if (rec.contains("labels") && !rec["labels"].is_null()) {
    const json& lab = rec["labels"];
    if (!lab.is_object()) throw RuntimeFailure(fail_prefix(line) + "'labels' must be an object");
    for (Head h : kAllHeads) {
      if (!is_span_head(h)) continue;
      auto it = lab.find(std::string(head_name(h)));
      if (it == lab.end() || it->is_null()) continue;
      ex.labels.span(h) = read_span(*it, ex, segment_of(h), line, warnings);
    }
    if (auto v = read_enum<Polarity>(lab, "polarity", parse_polarity, line)) ex.labels.polarity = v;
    if (auto v = read_enum<ValueChange>(lab, "value", parse_value, line)) ex.labels.value = v;
    if (auto v = read_enum<Ordering>(lab, "comparison", parse_ordering, line)) ex.labels.comparison = v;
    if (auto v = read_enum<Chain>(lab, "type", parse_chain, line)) ex.labels.type = v;
  }
  return ex;
}

json to_record(const Example& ex) {
  json rec = ex.extra;
  rec["id"] = ex.instance.id;
  rec["para"] = ex.instance.knowledge;
  rec["question"] = ex.instance.question;
  rec["options"] = json::array({ex.instance.options[0], ex.instance.options[1]});
  if (ex.instance.answer) rec["answer"] = *ex.instance.answer;
  if (!ex.para_anno.is_null()) rec["para_anno"] = ex.para_anno;
  if (!ex.question_anno.is_null()) rec["question_anno"] = ex.question_anno;

  // Every label is written explicitly so a reload does not depend on re-alignment.
  json lab = json::object();
  const Labels& L = ex.labels;
  for (Head h : kAllHeads) {
    if (!is_span_head(h)) continue;
    const auto& s = L.span(h);
    lab[std::string(head_name(h))] = s ? span_json(*s, ex, segment_of(h)) : json(nullptr);
  }
  lab["polarity"] = L.polarity ? json(polarity_name(*L.polarity)) : json(nullptr);
  lab["value"] = L.value ? json(value_name(*L.value)) : json(nullptr);
  lab["comparison"] = L.comparison ? json(to_string(*L.comparison)) : json(nullptr);
  lab["type"] = L.type ? json(to_string(*L.type)) : json(nullptr);
  rec["labels"] = lab;
  return rec;
}

Dataset parse_dataset(std::string_view jsonl) {
  Dataset ds;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw RuntimeFailure(fail_prefix(line_no) + "malformed record: " + e.what());
    }
    Example ex = parse_record(rec, line_no, &ds.alignment_warnings);
    // A null label explicitly written by save() must stay null even if an
    // annotation could have supplied it.
    if (rec.contains("labels") && rec["labels"].is_object()) {
      const json& lab = rec["labels"];
      for (Head h : kAllHeads) {
        auto it = lab.find(std::string(head_name(h)));
        if (it == lab.end() || !it->is_null()) continue;
        switch (h) {
          case Head::Polarity: ex.labels.polarity.reset(); break;
          case Head::Value: ex.labels.value.reset(); break;
          case Head::Comparison: ex.labels.comparison.reset(); break;
          case Head::Type: ex.labels.type.reset(); break;
          default: ex.labels.span(h).reset();
        }
      }
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::string serialize_dataset(std::span<const Example> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_record(ex).dump();
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

void save_dataset(const std::filesystem::path& path, std::span<const Example> examples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write dataset " + path.string());
  out << serialize_dataset(examples);
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

}  // namespace qreason::data
