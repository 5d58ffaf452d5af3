#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qreason::text {

// Dense token ids. The first four ids are reserved, in this order.
class Vocab {
 public:
  static constexpr int kBegin = 0;  // <s>
  static constexpr int kEnd = 1;    // </s>
  static constexpr int kPad = 2;    // <pad>
  static constexpr int kUnknown = 3;
  static constexpr int kReserved = 4;

  Vocab();

  // Tokens with frequency >= min_count, ordered by descending frequency then
  // lexicographically. `always` tokens are kept regardless of frequency.
  static Vocab build(std::span<const std::string> corpus, int min_count, std::span<const std::string> always = {});

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> ids(std::span<const std::string> tokens) const;

  // One token per line; line number is the id.
  std::string serialize() const;
  static Vocab parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void append(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace qreason::text
