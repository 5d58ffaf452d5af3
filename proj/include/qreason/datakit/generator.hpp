#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreason/datakit/dataset.hpp"

namespace qreason::data {

struct PropertyPair {
  std::string cause;
  std::string effect;
  std::vector<std::string> entities;

  bool operator==(const PropertyPair&) const = default;
};

struct Lexicon {
  std::vector<PropertyPair> pairs;

  static Lexicon builtin();
  static Lexicon from_json(const nlohmann::json& j);
  static Lexicon load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct GeneratorConfig {
  std::size_t train = 2000;
  std::size_t dev = 400;
  std::size_t test = 400;
  double prediction_weight = 2296;
  double comparison_weight = 400;
  std::uint64_t seed = 13;
  std::size_t dev_pairs = 8;
  std::size_t test_pairs = 8;
  double filler_probability = 0.3;
  double cause_increase_probability = 0.9;  // knowledge sentences mostly state the cause going up
  double distractor_probability = 0.0;      // adds a relation sentence about another pair of the split
  std::vector<int> knowledge_templates;  // empty means all
  std::optional<std::filesystem::path> lexicon_path;

  void validate() const;
};

GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig load_generator_config(const std::filesystem::path& path);

std::size_t knowledge_template_count();
std::size_t prediction_template_count();
std::size_t comparison_template_count();

struct SyntheticCorpus {
  Dataset train, dev, test;
  std::vector<PropertyPair> train_pairs, dev_pairs, test_pairs;
};

// Number of comparison instances among `n` under the configured ratio.
std::size_t comparison_count(std::size_t n, double prediction_weight, double comparison_weight);

SyntheticCorpus generate_synthetic_corpus(const GeneratorConfig& config);
SyntheticCorpus generate_synthetic_corpus(const GeneratorConfig& config, const Lexicon& lexicon);

}  // namespace qreason::data
