#include "qreason/textenc/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "qreason/error.hpp"
#include "qreason/textenc/tokenizer.hpp"

namespace qreason::text {

namespace {
const std::vector<std::string> kReservedTokens = {"<s>", "</s>", "<pad>", "<unk>"};
}

Vocab::Vocab() {
  for (const auto& t : kReservedTokens) append(t);
}

void Vocab::append(const std::string& token) {
  if (index_.contains(token)) return;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocab Vocab::build(std::span<const std::string> corpus, int min_count, std::span<const std::string> always) {
  if (corpus.empty()) throw InvalidInput("build_vocab: corpus is empty");
  if (min_count < 1) throw InvalidInput("build_vocab: min_count must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& line : corpus) {
    for (const auto& tok : tokenize(line)) ++counts[tok.text];
  }
  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [tok, c] : counts) {
    if (c >= min_count) kept.emplace_back(tok, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, c] : kept) v.append(tok);
  for (const auto& tok : always) v.append(tok);
  return v;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw InvalidInput("Vocab: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::vector<int> Vocab::ids(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::string Vocab::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocab Vocab::parse(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kReservedTokens.size() ||
      !std::equal(kReservedTokens.begin(), kReservedTokens.end(), lines.begin())) {
    throw RuntimeFailure("vocab: file does not start with the reserved tokens");
  }
  Vocab v;
  for (std::size_t i = kReservedTokens.size(); i < lines.size(); ++i) {
    if (lines[i].empty() || v.contains(lines[i])) throw RuntimeFailure("vocab: empty or duplicate token at line " + std::to_string(i + 1));
    v.append(lines[i]);
  }
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("vocab: cannot write " + path.string());
  out << serialize();
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("vocab: cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace qreason::text
