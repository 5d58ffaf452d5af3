#include "qreason/textenc/tokenizer.hpp"

#include <cctype>

#include "qreason/error.hpp"

namespace qreason::text {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_punct(c)) {
      tokens.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string word;
    while (i < text.size()) {
      const auto w = static_cast<unsigned char>(text[i]);
      if (is_space(w) || is_punct(w)) break;
      word.push_back(w < 0x80 ? static_cast<char>(std::tolower(w)) : static_cast<char>(w));
      ++i;
    }
    tokens.push_back({std::move(word), start, i});
  }
  return tokens;
}

std::string detokenize(std::string_view source, std::span<const Token> tokens, std::size_t first, std::size_t last) {
  if (first > last || last >= tokens.size()) throw InvalidInput("detokenize: token range out of bounds");
  const std::size_t begin = tokens[first].begin;
  const std::size_t end = tokens[last].end;
  if (end > source.size()) throw InvalidInput("detokenize: tokens do not belong to this source");
  return std::string(source.substr(begin, end - begin));
}

std::vector<std::string> token_texts(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

}  // namespace qreason::text
