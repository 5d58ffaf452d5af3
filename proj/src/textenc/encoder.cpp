#include "qreason/textenc/encoder.hpp"

#include <array>
#include <cmath>

#include "qreason/error.hpp"

namespace qreason::text {

using diff::Var;

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config, int vocab_size, diff::ParamSet<T>& params, const std::string& prefix,
                    std::mt19937_64& rng)
    : config_(config), vocab_size_(vocab_size) {
  const int d = config.hidden;
  if (d <= 0 || config.layers < 0 || config.heads <= 0 || d % config.heads != 0 || config.feed_forward <= 0 ||
      config.max_positions <= 0 || vocab_size <= Vocab::kReserved - 1) {
    throw InvalidInput("Encoder: inconsistent configuration");
  }
  token_embedding_ = params.add_uniform(prefix + "token_embedding", vocab_size, d, d, rng);
  position_embedding_ = params.add_uniform(prefix + "position_embedding", config.max_positions, d, d, rng);
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = prefix + "block" + std::to_string(l) + ".";
    Block b;
    b.ln1_gain = params.add_constant(p + "ln1.gain", 1, d, T(1), 1);
    b.ln1_bias = params.add_constant(p + "ln1.bias", 1, d, T(0), 1);
    b.qkv_w = params.add_uniform(p + "attn.qkv.weight", d, 3 * d, d, rng);
    // no key bias: it shifts every score of a query equally
    b.q_b = params.add_uniform(p + "attn.q.bias", 1, d, d, rng, 1);
    b.v_b = params.add_uniform(p + "attn.v.bias", 1, d, d, rng, 1);
    b.out_w = params.add_uniform(p + "attn.out.weight", d, d, d, rng);
    b.out_b = params.add_uniform(p + "attn.out.bias", 1, d, d, rng, 1);
    b.ln2_gain = params.add_constant(p + "ln2.gain", 1, d, T(1), 1);
    b.ln2_bias = params.add_constant(p + "ln2.bias", 1, d, T(0), 1);
    b.ff1_w = params.add_uniform(p + "ff1.weight", d, config.feed_forward, d, rng);
    b.ff1_b = params.add_uniform(p + "ff1.bias", 1, config.feed_forward, d, rng, 1);
    b.ff2_w = params.add_uniform(p + "ff2.weight", config.feed_forward, d, config.feed_forward, rng);
    b.ff2_b = params.add_uniform(p + "ff2.bias", 1, d, config.feed_forward, rng, 1);
    blocks_.push_back(std::move(b));
  }
  final_gain_ = params.add_constant(prefix + "final_ln.gain", 1, d, T(1), 1);
  final_bias_ = params.add_constant(prefix + "final_ln.bias", 1, d, T(0), 1);
}

template <typename T>
Var<T> Encoder<T>::attention(const Block& block, const Var<T>& x) const {
  const int d = config_.hidden;
  const int dh = d / config_.heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const Var<T> normed = diff::layer_norm(x, block.ln1_gain, block.ln1_bias);
  const std::array<Var<T>, 3> parts = {block.q_b, Var<T>::leaf(diff::Matrix<T>::Zero(1, d)), block.v_b};
  const Var<T> bias = diff::Ops<T>::concat_cols(parts);
  const Var<T> qkv = diff::affine(normed, block.qkv_w, bias);
  const Mask all_keys(static_cast<std::size_t>(x.rows()), 1);
  std::vector<Var<T>> heads;
  heads.reserve(static_cast<std::size_t>(config_.heads));
  for (int h = 0; h < config_.heads; ++h) {
    const Var<T> q = diff::scale_shift(diff::slice_cols(qkv, h * dh, dh), scale, T(0));
    const Var<T> k = diff::slice_cols(qkv, d + h * dh, dh);
    const Var<T> v = diff::slice_cols(qkv, 2 * d + h * dh, dh);
    const Var<T> weights = diff::softmax_rows_masked(diff::matmul_nt(q, k), all_keys);
    heads.push_back(diff::matmul(weights, v));
  }
  const Var<T> merged = diff::Ops<T>::concat_cols(heads);
  return diff::affine(merged, block.out_w, block.out_b);
}

template <typename T>
Var<T> Encoder<T>::forward(std::span<const int> ids) const {
  if (ids.empty()) throw InvalidInput("Encoder::forward: empty input");
  if (static_cast<int>(ids.size()) > config_.max_positions) {
    throw InvalidInput("Encoder::forward: sequence longer than max_positions");
  }
  for (int id : ids) {
    if (id < 0 || id >= vocab_size_) throw InvalidInput("Encoder::forward: token id outside vocabulary");
  }
  std::vector<int> positions(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
  Var<T> x = diff::add(diff::embedding(token_embedding_, ids), diff::embedding(position_embedding_, std::span<const int>(positions)));
  for (const auto& block : blocks_) {
    x = diff::add(x, attention(block, x));
    const Var<T> normed = diff::layer_norm(x, block.ln2_gain, block.ln2_bias);
    const Var<T> hidden = diff::relu(diff::affine(normed, block.ff1_w, block.ff1_b));
    x = diff::add(x, diff::affine(hidden, block.ff2_w, block.ff2_b));
  }
  return diff::layer_norm(x, final_gain_, final_bias_);
}

template <typename T>
EncodedPair<T> encode(const AssembledPair& input, const Encoder<T>& encoder) {
  if (static_cast<int>(input.first_mask.size()) != input.n_max ||
      static_cast<int>(input.second_mask.size()) != input.m_max || input.length > static_cast<int>(input.ids.size())) {
    throw InvalidInput("encode: malformed assembled input");
  }
  // Padded positions are never attended to, so only the unpadded prefix is run.
  const Var<T> hidden = encoder.forward(input.unpadded());
  EncodedPair<T> out;
  out.n = input.n;
  out.m = input.m;
  out.knowledge = diff::pad_rows(diff::slice_rows(hidden, input.first_offset, input.n), input.n_max);
  out.statement = diff::pad_rows(diff::slice_rows(hidden, input.second_offset, input.m), input.m_max);
  out.knowledge_mask = input.first_mask;
  out.statement_mask = input.second_mask;
  return out;
}

template class Encoder<float>;
template class Encoder<double>;
template EncodedPair<float> encode(const AssembledPair&, const Encoder<float>&);
template EncodedPair<double> encode(const AssembledPair&, const Encoder<double>&);

}  // namespace qreason::text
