#include "qreason/trainer/trainer.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "qreason/diffcore/adam.hpp"
#include "qreason/error.hpp"
#include "qreason/evalkit/metrics.hpp"

namespace qreason::train {

using nlohmann::json;
using diff::Var;

LossWeights::LossWeights() {
  for (Head h : kAllHeads) alpha[index(h)] = is_span_head(h) ? 0.1 : 0.2;
}

void LossWeights::validate() const {
  for (double a : alpha)
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("loss weights must be finite and non-negative");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw InvalidInput("learning_rate must be positive");
  if (batch_size <= 0 || epochs <= 0 || accumulation <= 0)
    throw InvalidInput("batch_size, epochs and accumulation must be positive");
  if (!(threshold > 0 && threshold < 1)) throw InvalidInput("threshold must lie in (0, 1)");
  if (patience < 0) throw InvalidInput("patience must be non-negative");
  if (!(word_dropout >= 0 && word_dropout < 1)) throw InvalidInput("word_dropout must lie in [0, 1)");
  weights.validate();
}

json to_json(const TrainConfig& c) {
  json w = json::object();
  for (Head h : kAllHeads) w[std::string(head_name(h))] = c.weights[h];
  json disabled = json::array();
  for (Head h : kAllHeads)
    if (!c.enabled.test(index(h))) disabled.push_back(std::string(head_name(h)));
  return json{{"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"accumulation", c.accumulation},
              {"seed", c.seed},
              {"threshold", c.threshold},
              {"patience", c.patience},
              {"word_dropout", c.word_dropout},
              {"weights", w},
              {"disabled_heads", disabled}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw InvalidInput("train config must be an object");
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.accumulation = j.value("accumulation", c.accumulation);
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
    c.patience = j.value("patience", c.patience);
    c.word_dropout = j.value("word_dropout", c.word_dropout);
    if (j.contains("weights")) {
      for (auto it = j["weights"].begin(); it != j["weights"].end(); ++it) {
        auto h = parse_head(it.key());
        if (!h) throw InvalidInput("unknown head in weights: " + it.key());
        c.weights[*h] = it.value().get<double>();
      }
    }
    if (j.contains("disabled_heads")) {
      c.enabled = heads::all_heads();
      for (const auto& name : j["disabled_heads"]) {
        auto h = parse_head(name.get<std::string>());
        if (!h) throw InvalidInput("unknown head: " + name.get<std::string>());
        c.enabled.reset(index(*h));
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad train config: ") + e.what());
  }
  c.validate();
  return c;
}

heads::HeadSet parse_ablation(const std::string& list) {
  heads::HeadSet off;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto h = parse_head(item);
    if (!h) throw InvalidInput("unknown head '" + item + "'");
    off.set(index(*h));
  }
  return off;
}

heads::HeadSet active_heads(const data::Labels& labels, const LossWeights& weights, heads::HeadSet enabled) {
  heads::HeadSet s;
  for (Head h : kAllHeads)
    if (enabled.test(index(h)) && weights[h] > 0 && labels.available(h)) s.set(index(h));
  return s;
}

template <typename T>
Var<T> reason_loss(const heads::HeadVars<T>& out, const data::Labels& labels, const LossWeights& weights,
                   heads::HeadSet enabled) {
  const auto live = active_heads(labels, weights, enabled);
  Var<T> total;
  for (Head h : kAllHeads) {
    if (!live.test(index(h))) continue;
    if (!out.has(h)) throw InvalidInput("reason_loss: no output for head " + std::string(head_name(h)));
    const Var<T>& p = out[h];
    std::vector<T> target;
    if (is_span_head(h)) {
      for (double v : labels.span_target(h, static_cast<std::size_t>(p.size()))) target.push_back(static_cast<T>(v));
    } else {
      if (p.size() != 2) throw InvalidInput("reason_loss: binary head is not a pair");
      const int c = *labels.class_index(h);
      target = {static_cast<T>(c == 0), static_cast<T>(c == 1)};
    }
    Var<T> term = diff::scale_shift(diff::cross_entropy(p, std::span<const T>(target)), static_cast<T>(weights[h]), T(0));
    total = total.valid() ? diff::add(total, term) : term;
  }
  return total.valid() ? total : Var<T>::scalar(T(0));
}

template <typename T>
Var<T> answer_loss(const Var<T>& probability, int label) {
  if (probability.size() != 1) throw InvalidInput("answer_loss: probability must be a scalar");
  if (label != 0 && label != 1) throw InvalidInput("answer_loss: label must be 0 or 1");
  const T one[] = {T(1)};
  const Var<T> p = label == 1 ? probability : diff::scale_shift(probability, T(-1), T(1));
  return diff::cross_entropy(p, std::span<const T>(one));
}

template <typename T>
Var<T> instance_answer_loss(const Var<T>& p0, const Var<T>& p1, int answer) {
  if (answer != 0 && answer != 1) throw InvalidInput("instance_answer_loss: answer must be 0 or 1");
  return diff::scale_shift(diff::add(answer_loss(p0, answer == 0), answer_loss(p1, answer == 1)), T(0.5), T(0));
}

std::string TrainResult::log_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    json j{{"epoch", e.epoch},
           {"split", "dev"},
           {"train_loss", e.train_loss},
           {"dev_metric", e.dev_metric},
           {"best", e.best},
           {"dev", e.dev_report}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(rng() % i)]);
}

// Replaces non-reserved ids in the unpadded prefix with <unk>.
text::AssembledPair drop_words(text::AssembledPair in, double rate, std::mt19937_64& rng) {
  if (rate <= 0) return in;
  for (int i = 0; i < in.length; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < rate && in.ids[static_cast<std::size_t>(i)] >= text::Vocab::kReserved)
      in.ids[static_cast<std::size_t>(i)] = text::Vocab::kUnknown;
  }
  return in;
}

template <typename T, class StepFn, class EvalFn>
TrainResult run_loop(diff::ParamSet<T>& params, std::size_t n, const TrainConfig& config, StepFn step, EvalFn evaluate,
                     const Progress& progress) {
  config.validate();
  if (n == 0) throw InvalidInput("training set is empty");
  const std::uint64_t clamps_before = diff::log_clamp_count();
  std::mt19937_64 rng(config.seed);
  diff::AdamState<T> adam;
  adam.config.learning_rate = config.learning_rate;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  typename diff::ParamSet<T>::Snapshot best;
  int stale = 0;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0;
    std::size_t counted = 0, pending = 0;
    int micro = 0;
    params.zero_grad();
    for (std::size_t b = 0; b < n; b += batch) {
      const std::size_t end = std::min(n, b + batch);
      for (std::size_t i = b; i < end; ++i) {
        const auto loss = step(order[i], rng);
        if (!loss) continue;
        total += *loss;
        ++counted;
        ++pending;
      }
      if (++micro == config.accumulation || end == n) {
        if (pending > 0) {
          params.scale_grad(static_cast<T>(1.0 / static_cast<double>(pending)));
          diff::adam_step(params, adam);
        }
        params.zero_grad();
        pending = 0;
        micro = 0;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = counted ? total / static_cast<double>(counted) : 0.0;
    std::tie(rec.dev_metric, rec.dev_report) = evaluate();
    if (rec.dev_metric > result.best_metric) {
      result.best_metric = rec.dev_metric;
      result.best_epoch = epoch;
      rec.best = true;
      best = params.snapshot();
      stale = 0;
    } else {
      ++stale;
    }
    result.epochs.push_back(rec);
    if (progress) progress(rec);
    if (config.patience > 0 && stale >= config.patience) break;
  }
  if (!best.empty()) params.restore(best);
  result.log_clamps = diff::log_clamp_count() - clamps_before;
  return result;
}

template <typename T>
std::string nonfinite_diagnostic(const Var<T>& loss, const std::string& id) {
  std::string msg = "non-finite loss on instance " + id;
  if (const auto* node = diff::first_nonfinite(loss)) msg += " (first non-finite op: " + std::string(node->op) + ")";
  return msg;
}

}  // namespace

text::Vocab build_reasoning_vocab(std::span<const data::Example> examples) {
  std::vector<std::string> corpus;
  for (const auto& ex : examples) {
    for (const auto& t : ex.knowledge_tokens) corpus.push_back(t.text);
    for (const auto& t : ex.statement_tokens) corpus.push_back(t.text);
  }
  if (corpus.empty()) throw InvalidInput("cannot build a vocabulary from an empty dataset");
  return text::Vocab::build(corpus, 1);
}

text::Vocab build_answer_vocab(std::span<const data::Example> examples) {
  std::vector<std::string> corpus;
  auto add = [&](const std::string& s) {
    for (const auto& t : text::tokenize(s)) corpus.push_back(t.text);
  };
  for (const auto& ex : examples) {
    add(ex.instance.knowledge);
    add(ex.instance.question);
    add(ex.instance.options[0]);
    add(ex.instance.options[1]);
    if (auto s = deduction::gold_synthetic(ex)) add(s->text);
  }
  if (corpus.empty()) throw InvalidInput("cannot build a vocabulary from an empty dataset");
  const std::vector<std::string> always = {answer::kSeparator, "will", "cause", "more", "less", "than"};
  return text::Vocab::build(corpus, 1, always);
}

template <typename T>
TrainResult train_reasoning(heads::ReasoningModel<T>& model, std::span<const data::Example> train,
                            std::span<const data::Example> dev, const TrainConfig& config, const Progress& progress) {
  std::vector<text::AssembledPair> inputs;
  inputs.reserve(train.size());
  for (const auto& ex : train) inputs.push_back(model.assemble(ex.knowledge_words(), ex.statement_words()));

  auto step = [&](std::size_t i, std::mt19937_64& rng) -> std::optional<double> {
    const auto& ex = train[i];
    const auto live = active_heads(ex.labels, config.weights, config.enabled);
    if (live.none()) return std::nullopt;
    const auto vars = model.forward(drop_words(inputs[i], config.word_dropout, rng), live);
    const auto loss = reason_loss(vars, ex.labels, config.weights, config.enabled);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) throw RuntimeFailure(nonfinite_diagnostic(loss, ex.instance.id));
    diff::backward(loss);
    return value;
  };
  auto evaluate = [&]() -> std::pair<double, json> {
    if (dev.empty()) return {0.0, json(nullptr)};
    const deduction::ModelReasoner<T> reasoner(model);
    const auto report = eval::module_eval(reasoner, dev, config.threshold);
    return {report.average(), report.to_json()};
  };
  return run_loop<T>(model.params(), train.size(), config, step, evaluate, progress);
}

std::string_view to_string(AnswerContext c) {
  switch (c) {
    case AnswerContext::GoldSynthetic: return "gold";
    case AnswerContext::ModelTraces: return "model";
    case AnswerContext::Knowledge: return "knowledge";
  }
  return "gold";
}

std::optional<AnswerContext> parse_answer_context(std::string_view s) {
  if (s == "gold") return AnswerContext::GoldSynthetic;
  if (s == "model") return AnswerContext::ModelTraces;
  if (s == "knowledge") return AnswerContext::Knowledge;
  return std::nullopt;
}

std::string answer_context(const data::Example& ex, const AnswerTrainOptions& options) {
  switch (options.context) {
    case AnswerContext::Knowledge: return ex.instance.knowledge;
    case AnswerContext::ModelTraces:
      if (!options.reasoner) throw InvalidInput("answer_context: model traces need a reasoner");
      return deduction::run_chain(ex, *options.reasoner, options.threshold).synthetic.text;
    case AnswerContext::GoldSynthetic: {
      auto s = deduction::gold_synthetic(ex);
      if (!s) throw InvalidInput("answer_context: instance " + ex.instance.id + " lacks the labels for a gold text");
      return s->text;
    }
  }
  return {};
}

template <typename T>
TrainResult train_answerer(answer::AnswerModel<T>& model, std::span<const data::Example> train,
                           std::span<const data::Example> dev, const TrainConfig& config,
                           const AnswerTrainOptions& options, const Progress& progress) {
  struct Prepared {
    std::array<text::AssembledPair, 2> inputs;
    int answer = -1;
  };
  auto prepare_all = [&](std::span<const data::Example> set) {
    std::vector<Prepared> out;
    out.reserve(set.size());
    for (const auto& ex : set) {
      Prepared p;
      if (ex.instance.answer) {
        const std::string ctx = answer_context(ex, options);
        for (int k = 0; k < 2; ++k)
          p.inputs[static_cast<std::size_t>(k)] =
              model.assemble(ctx, ex.instance.question, ex.instance.options[static_cast<std::size_t>(k)]);
        p.answer = *ex.instance.answer;
      }
      out.push_back(std::move(p));
    }
    return out;
  };
  const auto train_in = prepare_all(train);
  const auto dev_in = prepare_all(dev);

  auto step = [&](std::size_t i, std::mt19937_64& rng) -> std::optional<double> {
    const auto& p = train_in[i];
    if (p.answer < 0) return std::nullopt;
    const auto p0 = model.probability(drop_words(p.inputs[0], config.word_dropout, rng));
    const auto p1 = model.probability(drop_words(p.inputs[1], config.word_dropout, rng));
    const auto loss = instance_answer_loss(p0, p1, p.answer);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) throw RuntimeFailure(nonfinite_diagnostic(loss, train[i].instance.id));
    diff::backward(loss);
    return value;
  };
  auto evaluate = [&]() -> std::pair<double, json> {
    std::size_t correct = 0, total = 0;
    for (const auto& p : dev_in) {
      if (p.answer < 0) continue;
      const double s0 = static_cast<double>(model.probability(p.inputs[0]).item());
      const double s1 = static_cast<double>(model.probability(p.inputs[1]).item());
      correct += (s1 > s0 ? 1 : 0) == p.answer;
      ++total;
    }
    const double acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    return {acc, json{{"accuracy", acc}, {"count", total}, {"context", to_string(options.context)}}};
  };
  return run_loop<T>(model.params(), train.size(), config, step, evaluate, progress);
}

template Var<float> reason_loss(const heads::HeadVars<float>&, const data::Labels&, const LossWeights&, heads::HeadSet);
template Var<double> reason_loss(const heads::HeadVars<double>&, const data::Labels&, const LossWeights&,
                                 heads::HeadSet);
template Var<float> answer_loss(const Var<float>&, int);
template Var<double> answer_loss(const Var<double>&, int);
template Var<float> instance_answer_loss(const Var<float>&, const Var<float>&, int);
template Var<double> instance_answer_loss(const Var<double>&, const Var<double>&, int);
template TrainResult train_reasoning(heads::ReasoningModel<float>&, std::span<const data::Example>,
                                     std::span<const data::Example>, const TrainConfig&, const Progress&);
template TrainResult train_reasoning(heads::ReasoningModel<double>&, std::span<const data::Example>,
                                     std::span<const data::Example>, const TrainConfig&, const Progress&);
template TrainResult train_answerer(answer::AnswerModel<float>&, std::span<const data::Example>,
                                    std::span<const data::Example>, const TrainConfig&, const AnswerTrainOptions&,
                                    const Progress&);
template TrainResult train_answerer(answer::AnswerModel<double>&, std::span<const data::Example>,
                                    std::span<const data::Example>, const TrainConfig&, const AnswerTrainOptions&,
                                    const Progress&);

}  // namespace qreason::train
