#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qreason/datakit/instance.hpp"

namespace qreason::data {

struct Dataset {
  std::vector<Example> examples;
  std::size_t alignment_warnings = 0;  // annotation strings not found in their source

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// Parses a direction sign such as "MORE", "LESS", "+", "-", 1 or -1.
std::optional<int> parse_sign(const nlohmann::json& sign);

struct Supervision {
  std::optional<Polarity> polarity;
  std::optional<Chain> type;
};

// Polarity and reasoning type from the raw para_anno / question_anno records.
Supervision derive_supervision(const nlohmann::json& para_anno, const nlohmann::json& question_anno);

// Locates an annotation string in a token sequence. When it occurs more than
// once, the occurrence nearest a correlation keyword wins; ties go to the first.
std::optional<TokenSpan> align_annotation(std::span<const text::Token> source, std::string_view annotation);

bool is_correlation_keyword(std::string_view token);

// One record. `line` is only used in error messages.
Example parse_record(const nlohmann::json& record, std::size_t line, std::size_t* warnings = nullptr);
nlohmann::json to_record(const Example& example);

Dataset parse_dataset(std::string_view jsonl);
std::string serialize_dataset(std::span<const Example> examples);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, std::span<const Example> examples);

}  // namespace qreason::data
