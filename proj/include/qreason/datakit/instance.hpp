#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreason/textenc/tokenizer.hpp"
#include "qreason/types.hpp"

namespace qreason::data {

struct Instance {
  std::string id;
  std::string knowledge;
  std::string question;
  std::array<std::string, 2> options;
  std::optional<int> answer;  // gold option index

  bool operator==(const Instance&) const = default;
};

// Inclusive token range within one segment.
struct TokenSpan {
  int start = 0;
  int end = 0;
  bool operator==(const TokenSpan&) const = default;
};

// Auxiliary supervision. An absent optional is a gamma flag of zero.
struct Labels {
  std::optional<TokenSpan> cause, effect, world, world1, world2;
  std::optional<Polarity> polarity;
  std::optional<ValueChange> value;
  std::optional<Ordering> comparison;
  std::optional<Chain> type;
  std::optional<int> answer;

  bool available(Head head) const;
  const std::optional<TokenSpan>& span(Head head) const;
  std::optional<TokenSpan>& span(Head head);
  // Gold class index for the binary heads.
  std::optional<int> class_index(Head head) const;
  // Multi-hot target over `length` positions (zeros beyond the span).
  std::vector<double> span_target(Head head, std::size_t length) const;

  bool operator==(const Labels&) const = default;
};

// The text the reasoning model sees as S: question followed by both options.
std::string statement_text(const Instance& instance);

struct Example {
  Instance instance;
  Labels labels;
  nlohmann::json para_anno;      // null when absent
  nlohmann::json question_anno;  // null when absent
  nlohmann::json extra = nlohmann::json::object();  // unrecognised fields, kept verbatim
  std::string statement;
  std::vector<text::Token> knowledge_tokens;
  std::vector<text::Token> statement_tokens;

  std::vector<std::string> knowledge_words() const { return text::token_texts(knowledge_tokens); }
  std::vector<std::string> statement_words() const { return text::token_texts(statement_tokens); }
  const std::string& source(Segment s) const { return s == Segment::Knowledge ? instance.knowledge : statement; }
  const std::vector<text::Token>& tokens(Segment s) const {
    return s == Segment::Knowledge ? knowledge_tokens : statement_tokens;
  }
};

// Tokenizes both segments; labels are left empty.
Example prepare(Instance instance);

}  // namespace qreason::data
