#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "qreason/diffcore/ops.hpp"
#include "qreason/diffcore/params.hpp"
#include "qreason/textenc/assemble.hpp"

namespace qreason::text {

struct EncoderConfig {
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int feed_forward = 256;
  int max_positions = 256;
};

// Token + learned position embeddings followed by pre-norm transformer
// blocks and a final layer norm.
template <typename T>
class Encoder {
 public:
  Encoder(const EncoderConfig& config, int vocab_size, diff::ParamSet<T>& params, const std::string& prefix,
          std::mt19937_64& rng);

  // Hidden states for an unpadded id sequence, length x hidden.
  diff::Var<T> forward(std::span<const int> ids) const;

  const EncoderConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }

 private:
  struct Block {
    diff::Var<T> ln1_gain, ln1_bias, qkv_w, q_b, v_b, out_w, out_b;
    diff::Var<T> ln2_gain, ln2_bias, ff1_w, ff1_b, ff2_w, ff2_b;
  };
  diff::Var<T> attention(const Block& block, const diff::Var<T>& x) const;

  EncoderConfig config_;
  int vocab_size_;
  diff::Var<T> token_embedding_;
  diff::Var<T> position_embedding_;
  std::vector<Block> blocks_;
  diff::Var<T> final_gain_, final_bias_;
};

// Contextual representations of both segments, padded to fixed length with
// zero rows.
template <typename T>
struct EncodedPair {
  diff::Var<T> knowledge;  // n_max x d
  diff::Var<T> statement;  // m_max x d
  Mask knowledge_mask;
  Mask statement_mask;
  int n = 0;
  int m = 0;
};

template <typename T>
EncodedPair<T> encode(const AssembledPair& input, const Encoder<T>& encoder);

extern template class Encoder<float>;
extern template class Encoder<double>;
extern template EncodedPair<float> encode(const AssembledPair&, const Encoder<float>&);
extern template EncodedPair<double> encode(const AssembledPair&, const Encoder<double>&);

}  // namespace qreason::text
