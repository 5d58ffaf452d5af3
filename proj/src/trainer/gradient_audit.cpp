#include "qreason/trainer/gradient_audit.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "qreason/error.hpp"
#include "qreason/heads/model.hpp"
#include "qreason/heads/reason_heads.hpp"
#include "qreason/trainer/trainer.hpp"

namespace qreason::train {

GradientAudit audit_model_gradients(const GradientAuditConfig& c) {
  if (c.n < 10 || c.m < 10) throw InvalidInput("gradient audit: n and m must be at least 10");
  std::mt19937_64 rng(c.seed);
  std::vector<std::string> words;
  for (int i = 0; i < 24; ++i) words.push_back("w" + std::to_string(i));
  auto draw = [&](int count) {
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) out.push_back(words[rng() % words.size()]);
    return out;
  };
  const auto knowledge = draw(c.n - 2);
  const auto statement = draw(c.m - 1);

  heads::ModelConfig mc;
  mc.encoder.hidden = c.hidden;
  mc.encoder.layers = c.layers;
  mc.encoder.heads = c.heads;
  mc.encoder.feed_forward = 4 * c.hidden;
  mc.n_max = c.n;
  mc.m_max = c.m;
  mc.encoder.max_positions = text::assembled_length(c.n, c.m);
  mc.seed = c.seed;
  heads::ReasoningModel<double> model(mc, text::Vocab::build(words, 1));

  data::Labels labels;
  labels.cause = data::TokenSpan{1, 2};
  labels.effect = data::TokenSpan{5, 6};
  labels.world = data::TokenSpan{0, 1};
  labels.world1 = data::TokenSpan{2, 3};
  labels.world2 = data::TokenSpan{6, 8};
  labels.polarity = Polarity::Negative;
  labels.value = ValueChange::Increase;
  labels.comparison = Ordering::World1Less;
  labels.type = Chain::Comparison;

  const auto input = model.assemble(knowledge, statement);
  const auto fragment = [&] { return reason_loss(model.forward(input), labels, LossWeights{}); };

  GradientAudit audit;
  audit.parameters = model.params().scalar_count();
  audit.full = diff::gradcheck(fragment, model.params(), c.step);

  // The linear scoring layers (output projections and W_com) on their own,
  // fed fixed random representations.
  diff::ParamSet<double> head_params;
  std::mt19937_64 head_rng(c.seed + 1);
  const heads::ReasonHeads<double> scoring(c.hidden, head_params, heads::ReasoningModel<double>::kHeadPrefix, head_rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_rows = [&](int rows) {
    diff::Matrix<double> m(rows, c.hidden);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(head_rng);
    return diff::Var<double>::leaf(m);
  };
  const auto kb = random_rows(c.n);
  const auto st = random_rows(c.m);
  const diff::Mask kmask(static_cast<std::size_t>(c.n), 1), smask(static_cast<std::size_t>(c.m), 1);
  const auto heads_fragment = [&] {
    heads::HeadVars<double> v;
    const auto [cause, effect] = scoring.find_cause_effect(kb, kmask);
    const auto world = scoring.find_world(st, smask);
    const auto [w1, w2] = scoring.find_worlds(st, smask);
    v.out[index(Head::Cause)] = cause.probs;
    v.out[index(Head::Effect)] = effect.probs;
    v.out[index(Head::World)] = world.probs;
    v.out[index(Head::World1)] = w1.probs;
    v.out[index(Head::World2)] = w2.probs;
    v.out[index(Head::Polarity)] = scoring.polarity_check(kb, cause, effect).probs;
    v.out[index(Head::Value)] = scoring.value_prediction(st, world).probs;
    v.out[index(Head::Comparison)] = scoring.worlds_comparison(kb, cause, st, w1, w2).probs;
    v.out[index(Head::Type)] = scoring.classify_type(st, smask).probs;
    return v;
  };
  // Each head against its own loss term.
  for (std::size_t k = 0; k < kHeadCount; ++k) {
    const auto head = static_cast<Head>(k);
    heads::HeadSet only;
    only.set(k);
    const auto own = heads::ReasonHeads<double>::exclusive_parameters(head, heads::ReasoningModel<double>::kHeadPrefix);
    std::vector<diff::GradTarget> targets;
    for (const auto& p : head_params.entries()) {
      const bool linear = p.name.find(".out.") != std::string::npos || p.name.find(".bilinear") != std::string::npos;
      if (linear && std::find(own.begin(), own.end(), p.name) != own.end()) targets.push_back({p.name, p.var});
    }
    const auto r = diff::gradcheck([&] { return reason_loss(heads_fragment(), labels, LossWeights{}, only); }, targets,
                                   c.step);
    const std::size_t seen = audit.heads.checked + r.checked;
    if (audit.heads.worst_index < 0 || r.max_rel_error > audit.heads.max_rel_error) audit.heads = r;
    audit.heads.checked = seen;
  }
  return audit;
}

}  // namespace qreason::train
