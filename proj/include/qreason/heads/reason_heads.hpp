#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qreason/diffcore/ops.hpp"
#include "qreason/diffcore/params.hpp"
#include "qreason/types.hpp"

namespace qreason::heads {

using diff::Mask;
using diff::Var;

// Distribution over one segment's positions, stored as length x 1.
template <typename T>
struct AttnVec {
  Var<T> probs;
  Segment segment;
};

// Two-way distribution stored as 1 x 2.
template <typename T>
struct BinaryDist {
  Var<T> probs;
  Head kind;
};

// Per-token scorer: tanh hidden layer of width d, then a scalar logit. The
// logit has no bias; a constant shift cancels in the softmax over positions.
template <typename T>
struct TokenScorer {
  Var<T> hidden_w, hidden_b, out_w;
};

// Classifier: tanh hidden layer of width d, then two logits.
template <typename T>
struct Classifier {
  Var<T> hidden_w, hidden_b, out_w, out_b;
};

template <typename T>
class ReasonHeads {
 public:
  ReasonHeads(int hidden, diff::ParamSet<T>& params, const std::string& prefix, std::mt19937_64& rng);

  std::pair<AttnVec<T>, AttnVec<T>> find_cause_effect(const Var<T>& knowledge, const Mask& mask) const;
  BinaryDist<T> polarity_check(const Var<T>& knowledge, const AttnVec<T>& cause, const AttnVec<T>& effect) const;
  AttnVec<T> find_world(const Var<T>& statement, const Mask& mask) const;
  BinaryDist<T> value_prediction(const Var<T>& statement, const AttnVec<T>& world) const;
  std::pair<AttnVec<T>, AttnVec<T>> find_worlds(const Var<T>& statement, const Mask& mask) const;
  BinaryDist<T> worlds_comparison(const Var<T>& knowledge, const AttnVec<T>& cause, const Var<T>& statement,
                                  const AttnVec<T>& world1, const AttnVec<T>& world2) const;
  BinaryDist<T> classify_type(const Var<T>& statement, const Mask& mask) const;

  int hidden() const { return hidden_; }

  // Parameter names owned by the given head. A span head's scorer also
  // receives gradient through the heads listed by consumers().
  static std::vector<std::string> exclusive_parameters(Head head, const std::string& prefix);

 private:
  AttnVec<T> attend(const TokenScorer<T>& scorer, const Var<T>& rows, const Mask& mask, Segment segment) const;
  BinaryDist<T> classify(const Classifier<T>& head, const Var<T>& features, Head kind) const;

  int hidden_;
  TokenScorer<T> cause_, effect_, world_, world1_, world2_;
  Classifier<T> polarity_, value_, type_;
  Var<T> comparison_;
};

// Heads whose inputs include this head's attention vector.
std::vector<Head> consumers(Head head);

extern template class ReasonHeads<float>;
extern template class ReasonHeads<double>;

}  // namespace qreason::heads
