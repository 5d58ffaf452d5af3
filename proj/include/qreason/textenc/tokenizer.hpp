#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qreason::text {

struct Token {
  std::string text;   // lowercased surface form
  std::size_t begin;  // byte offset into the source
  std::size_t end;    // one past the last byte
};

// Lowercases ASCII, splits on whitespace and emits each ASCII punctuation
// character as its own token.
std::vector<Token> tokenize(std::string_view text);

// Source substring covered by tokens [first, last] (inclusive).
std::string detokenize(std::string_view source, std::span<const Token> tokens, std::size_t first, std::size_t last);

std::vector<std::string> token_texts(std::span<const Token> tokens);

}  // namespace qreason::text
