#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qreason/heads/reason_heads.hpp"
#include "qreason/textenc/encoder.hpp"
#include "qreason/textenc/vocab.hpp"

namespace qreason::heads {

struct ModelConfig {
  text::EncoderConfig encoder;
  int n_max = 64;
  int m_max = 64;
  std::uint64_t seed = 7;
};

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& json);

using HeadSet = std::bitset<kHeadCount>;

inline HeadSet all_heads() { return HeadSet().set(); }
inline HeadSet head_set(std::initializer_list<Head> heads) {
  HeadSet s;
  for (Head h : heads) s.set(index(h));
  return s;
}

// Graph outputs of one forward pass. Heads that were not requested (and are
// not upstream of a requested head) hold invalid Vars.
template <typename T>
struct HeadVars {
  text::EncodedPair<T> encoded;
  std::array<Var<T>, kHeadCount> out;
  bool has(Head h) const { return out[index(h)].valid(); }
  const Var<T>& operator[](Head h) const { return out[index(h)]; }
};

// Plain probability vectors; span heads are padded to the segment length.
struct HeadOutputs {
  std::array<std::vector<double>, kHeadCount> probs;
  bool has(Head h) const { return !probs[index(h)].empty(); }
  const std::vector<double>& operator[](Head h) const { return probs[index(h)]; }
  std::vector<double>& operator[](Head h) { return probs[index(h)]; }
};

template <typename T>
HeadOutputs to_outputs(const HeadVars<T>& vars);

// Shared encoder plus the seven reasoning modules.
template <typename T>
class ReasoningModel {
 public:
  ReasoningModel(const ModelConfig& config, text::Vocab vocab);
  ReasoningModel(const ReasoningModel&) = delete;
  ReasoningModel& operator=(const ReasoningModel&) = delete;

  text::AssembledPair assemble(std::span<const std::string> knowledge, std::span<const std::string> statement) const;
  HeadVars<T> forward(const text::AssembledPair& input, HeadSet requested = all_heads()) const;
  HeadOutputs infer(std::span<const std::string> knowledge, std::span<const std::string> statement) const;

  const ModelConfig& config() const { return config_; }
  const text::Vocab& vocab() const { return vocab_; }
  diff::ParamSet<T>& params() { return params_; }
  const diff::ParamSet<T>& params() const { return params_; }
  const text::Encoder<T>& encoder() const { return *encoder_; }
  const ReasonHeads<T>& heads() const { return *heads_; }

  static constexpr const char* kHeadPrefix = "heads.";

  // Directory with params.qrck, vocab.txt and model.json.
  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<ReasoningModel> load(const std::filesystem::path& dir);

 private:
  ModelConfig config_;
  text::Vocab vocab_;
  diff::ParamSet<T> params_;
  std::unique_ptr<text::Encoder<T>> encoder_;
  std::unique_ptr<ReasonHeads<T>> heads_;
};

extern template class ReasoningModel<float>;
extern template class ReasoningModel<double>;
extern template HeadOutputs to_outputs(const HeadVars<float>&);
extern template HeadOutputs to_outputs(const HeadVars<double>&);

}  // namespace qreason::heads
