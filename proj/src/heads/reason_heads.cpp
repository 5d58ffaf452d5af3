#include "qreason/heads/reason_heads.hpp"

#include <algorithm>

#include "qreason/error.hpp"

namespace qreason::heads {

namespace {

std::string scorer_name(Head h) { return std::string(head_name(h)); }

template <typename T>
TokenScorer<T> make_scorer(int d, diff::ParamSet<T>& params, const std::string& name, std::mt19937_64& rng) {
  return {params.add_uniform(name + ".hidden.weight", d, d, d, rng),
          params.add_uniform(name + ".hidden.bias", 1, d, d, rng, 1),
          params.add_uniform(name + ".out.weight", d, 1, d, rng)};
}

template <typename T>
Classifier<T> make_classifier(int in, int d, diff::ParamSet<T>& params, const std::string& name,
                              std::mt19937_64& rng) {
  return {params.add_uniform(name + ".hidden.weight", in, d, in, rng),
          params.add_uniform(name + ".hidden.bias", 1, d, in, rng, 1),
          params.add_uniform(name + ".out.weight", d, 2, d, rng),
          params.add_uniform(name + ".out.bias", 1, 2, d, rng, 1)};
}

template <typename T>
void require_segment(const AttnVec<T>& v, Segment s, Eigen::Index rows, const char* op) {
  if (v.segment != s) throw InvalidInput(std::string(op) + ": attention vector over the wrong segment");
  if (v.probs.rows() != rows || v.probs.cols() != 1) {
    throw InvalidInput(std::string(op) + ": attention length does not match representations");
  }
}

}  // namespace

template <typename T>
ReasonHeads<T>::ReasonHeads(int hidden, diff::ParamSet<T>& params, const std::string& prefix, std::mt19937_64& rng)
    : hidden_(hidden) {
  if (hidden <= 0) throw InvalidInput("ReasonHeads: hidden size must be positive");
  cause_ = make_scorer(hidden, params, prefix + scorer_name(Head::Cause), rng);
  effect_ = make_scorer(hidden, params, prefix + scorer_name(Head::Effect), rng);
  world_ = make_scorer(hidden, params, prefix + scorer_name(Head::World), rng);
  world1_ = make_scorer(hidden, params, prefix + scorer_name(Head::World1), rng);
  world2_ = make_scorer(hidden, params, prefix + scorer_name(Head::World2), rng);
  polarity_ = make_classifier(2 * hidden, hidden, params, prefix + scorer_name(Head::Polarity), rng);
  value_ = make_classifier(hidden, hidden, params, prefix + scorer_name(Head::Value), rng);
  type_ = make_classifier(hidden, hidden, params, prefix + scorer_name(Head::Type), rng);
  comparison_ = params.add_uniform(prefix + scorer_name(Head::Comparison) + ".bilinear", hidden, hidden, hidden, rng);
}

template <typename T>
std::vector<std::string> ReasonHeads<T>::exclusive_parameters(Head head, const std::string& prefix) {
  const std::string base = prefix + scorer_name(head);
  if (head == Head::Comparison) return {base + ".bilinear"};
  if (is_span_head(head)) return {base + ".hidden.weight", base + ".hidden.bias", base + ".out.weight"};
  return {base + ".hidden.weight", base + ".hidden.bias", base + ".out.weight", base + ".out.bias"};
}

template <typename T>
AttnVec<T> ReasonHeads<T>::attend(const TokenScorer<T>& scorer, const Var<T>& rows, const Mask& mask,
                                  Segment segment) const {
  if (rows.cols() != hidden_) throw InvalidInput("attention head: representation width differs from d");
  if (static_cast<Eigen::Index>(mask.size()) != rows.rows()) throw InvalidInput("attention head: mask length mismatch");
  // Rows past the last active position cannot receive probability; skip them.
  const auto last = std::find(mask.rbegin(), mask.rend(), std::uint8_t{1});
  if (last == mask.rend()) throw InvalidInput("attention head: mask has no active position");
  const auto active = static_cast<Eigen::Index>(mask.rend() - last);
  const Var<T> x = active == rows.rows() ? rows : diff::slice_rows(rows, 0, active);
  const Var<T> h = diff::tanh(diff::affine(x, scorer.hidden_w, scorer.hidden_b));
  const Var<T> logits = diff::matmul(h, scorer.out_w);
  const Var<T> probs = diff::softmax_masked(logits, std::span<const std::uint8_t>(mask.data(), static_cast<std::size_t>(active)));
  return {active == rows.rows() ? probs : diff::pad_rows(probs, rows.rows()), segment};
}

template <typename T>
BinaryDist<T> ReasonHeads<T>::classify(const Classifier<T>& head, const Var<T>& features, Head kind) const {
  const Var<T> h = diff::tanh(diff::affine(features, head.hidden_w, head.hidden_b));
  const Var<T> logits = diff::affine(h, head.out_w, head.out_b);
  static const Mask both = {1, 1};
  return {diff::softmax_masked(logits, both), kind};
}

template <typename T>
std::pair<AttnVec<T>, AttnVec<T>> ReasonHeads<T>::find_cause_effect(const Var<T>& knowledge, const Mask& mask) const {
  return {attend(cause_, knowledge, mask, Segment::Knowledge), attend(effect_, knowledge, mask, Segment::Knowledge)};
}

template <typename T>
BinaryDist<T> ReasonHeads<T>::polarity_check(const Var<T>& knowledge, const AttnVec<T>& cause,
                                             const AttnVec<T>& effect) const {
  require_segment(cause, Segment::Knowledge, knowledge.rows(), "polarity_check");
  require_segment(effect, Segment::Knowledge, knowledge.rows(), "polarity_check");
  const Var<T> features =
      diff::concat_cols<T>({diff::weighted_sum(knowledge, cause.probs), diff::weighted_sum(knowledge, effect.probs)});
  return classify(polarity_, features, Head::Polarity);
}

template <typename T>
AttnVec<T> ReasonHeads<T>::find_world(const Var<T>& statement, const Mask& mask) const {
  return attend(world_, statement, mask, Segment::Statement);
}

template <typename T>
BinaryDist<T> ReasonHeads<T>::value_prediction(const Var<T>& statement, const AttnVec<T>& world) const {
  require_segment(world, Segment::Statement, statement.rows(), "value_prediction");
  return classify(value_, diff::weighted_sum(statement, world.probs), Head::Value);
}

template <typename T>
std::pair<AttnVec<T>, AttnVec<T>> ReasonHeads<T>::find_worlds(const Var<T>& statement, const Mask& mask) const {
  return {attend(world1_, statement, mask, Segment::Statement), attend(world2_, statement, mask, Segment::Statement)};
}

template <typename T>
BinaryDist<T> ReasonHeads<T>::worlds_comparison(const Var<T>& knowledge, const AttnVec<T>& cause,
                                                const Var<T>& statement, const AttnVec<T>& world1,
                                                const AttnVec<T>& world2) const {
  if (knowledge.cols() != hidden_ || statement.cols() != hidden_) {
    throw InvalidInput("worlds_comparison: representation width differs from d");
  }
  require_segment(cause, Segment::Knowledge, knowledge.rows(), "worlds_comparison");
  require_segment(world1, Segment::Statement, statement.rows(), "worlds_comparison");
  require_segment(world2, Segment::Statement, statement.rows(), "worlds_comparison");
  const Var<T> c = diff::weighted_sum(knowledge, cause.probs);
  const Var<T> s1 = diff::bilinear(c, comparison_, diff::weighted_sum(statement, world1.probs));
  const Var<T> s2 = diff::bilinear(c, comparison_, diff::weighted_sum(statement, world2.probs));
  static const Mask both = {1, 1};
  return {diff::softmax_masked(diff::concat_cols<T>({s1, s2}), both), Head::Comparison};
}

template <typename T>
BinaryDist<T> ReasonHeads<T>::classify_type(const Var<T>& statement, const Mask& mask) const {
  if (statement.cols() != hidden_) throw InvalidInput("classify_type: representation width differs from d");
  return classify(type_, diff::mean_rows_masked(statement, mask), Head::Type);
}

std::vector<Head> consumers(Head head) {
  switch (head) {
    case Head::Cause: return {Head::Polarity, Head::Comparison};
    case Head::Effect: return {Head::Polarity};
    case Head::World: return {Head::Value};
    case Head::World1:
    case Head::World2: return {Head::Comparison};
    default: return {};
  }
}

template class ReasonHeads<float>;
template class ReasonHeads<double>;

}  // namespace qreason::heads
