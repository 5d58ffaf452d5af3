#include "qreason/deduction/chain.hpp"

#include <algorithm>

#include "qreason/error.hpp"

namespace qreason::deduction {

template <typename T>
heads::HeadOutputs ModelReasoner<T>::reason(const data::Example& example) const {
  const auto k = example.knowledge_words();
  const auto s = example.statement_words();
  return heads::to_outputs(model_.forward(model_.assemble(k, s), heads::all_heads()));
}

template class ModelReasoner<float>;
template class ModelReasoner<double>;

heads::HeadOutputs oracle_outputs(const data::Example& example) {
  heads::HeadOutputs out;
  const data::Labels& L = example.labels;
  for (Head h : kAllHeads) {
    auto& p = out[h];
    if (is_span_head(h)) {
      const std::size_t n = example.tokens(segment_of(h)).size();
      const auto& s = L.span(h);
      if (s) {
        p = L.span_target(h, n);
        const double k = static_cast<double>(s->end - s->start + 1);
        for (auto& v : p) v /= k;
      } else {
        p.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
      }
    } else {
      const auto c = L.class_index(h);
      p = c ? std::vector<double>{*c == 0 ? 1.0 : 0.0, *c == 1 ? 1.0 : 0.0} : std::vector<double>{0.5, 0.5};
    }
  }
  return out;
}

heads::HeadOutputs OracleReasoner::reason(const data::Example& example) const { return oracle_outputs(example); }

std::optional<SyntheticText> gold_synthetic(const data::Example& example) {
  const data::Labels& L = example.labels;
  if (!L.type || !L.effect || !L.polarity) return std::nullopt;
  auto text_of = [&](Head h) {
    const auto& s = *L.span(h);
    const Segment seg = segment_of(h);
    return text::detokenize(example.source(seg), example.tokens(seg), static_cast<std::size_t>(s.start),
                            static_cast<std::size_t>(s.end));
  };
  SlotRecord slots;
  slots.chain = *L.type;
  slots.effect = text_of(Head::Effect);
  if (*L.type == Chain::Prediction) {
    if (!L.world || !L.value) return std::nullopt;
    slots.world = text_of(Head::World);
    slots.direction = deduce_prediction(*L.polarity, *L.value);
  } else {
    if (!L.world1 || !L.world2 || !L.comparison) return std::nullopt;
    slots.world = text_of(Head::World1);
    slots.world2 = text_of(Head::World2);
    slots.direction = deduce_comparison(*L.polarity, *L.comparison);
  }
  return synthesize_text(slots);
}

Span read_span(const data::Example& example, const heads::HeadOutputs& outputs, Head head, double threshold) {
  if (!is_span_head(head)) throw InvalidInput("read_span: not a span head");
  if (!outputs.has(head)) throw InvalidInput("read_span: missing output for head " + std::string(head_name(head)));
  const Segment seg = segment_of(head);
  const auto& tokens = example.tokens(seg);
  const auto& probs = outputs[head];
  const std::size_t n = std::min(probs.size(), tokens.size());
  if (n == 0) throw InvalidInput("read_span: empty segment");
  const Span span = attention_to_span(std::span<const double>(probs.data(), n), threshold, seg);
  return with_text(span, example.source(seg), tokens);
}

namespace {

std::size_t decide(const heads::HeadOutputs& out, Head head) {
  const auto& p = out[head];
  if (p.size() != 2) throw InvalidInput("run_chain: missing distribution for head " + std::string(head_name(head)));
  return argmax2(p[0], p[1]);
}

}  // namespace

ReasoningTrace run_chain(const data::Example& example, const Reasoner& reasoner, double threshold,
                         std::optional<Chain> forced) {
  return run_chain(example, reasoner.reason(example), threshold, forced);
}

ReasoningTrace run_chain(const data::Example& example, heads::HeadOutputs outputs, double threshold,
                         std::optional<Chain> forced) {
  ReasoningTrace t;
  t.id = example.instance.id;
  t.outputs = std::move(outputs);
  t.forced = forced.has_value();
  t.type = forced ? *forced : static_cast<Chain>(decide(t.outputs, Head::Type));

  t.cause = read_span(example, t.outputs, Head::Cause, threshold);
  t.effect = read_span(example, t.outputs, Head::Effect, threshold);
  t.polarity = static_cast<Polarity>(decide(t.outputs, Head::Polarity));

  SlotRecord slots;
  slots.chain = t.type;
  slots.effect = t.effect.text;
  if (t.type == Chain::Prediction) {
    t.world = read_span(example, t.outputs, Head::World, threshold);
    t.value = static_cast<ValueChange>(decide(t.outputs, Head::Value));
    t.direction = deduce_prediction(t.polarity, *t.value);
    slots.world = t.world->text;
  } else {
    t.world1 = read_span(example, t.outputs, Head::World1, threshold);
    t.world2 = read_span(example, t.outputs, Head::World2, threshold);
    t.comparison = static_cast<Ordering>(decide(t.outputs, Head::Comparison));
    t.direction = deduce_comparison(t.polarity, *t.comparison);
    slots.world = t.world1->text;
    slots.world2 = t.world2->text;
  }
  slots.direction = t.direction;
  t.synthetic = synthesize_text(slots);
  return t;
}

}  // namespace qreason::deduction
