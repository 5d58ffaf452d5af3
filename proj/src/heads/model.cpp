#include "qreason/heads/model.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "qreason/diffcore/checkpoint.hpp"
#include "qreason/error.hpp"

namespace qreason::heads {

using nlohmann::json;

std::string config_to_json(const ModelConfig& c) {
  json j = {{"hidden", c.encoder.hidden},
            {"layers", c.encoder.layers},
            {"heads", c.encoder.heads},
            {"feed_forward", c.encoder.feed_forward},
            {"max_positions", c.encoder.max_positions},
            {"n_max", c.n_max},
            {"m_max", c.m_max},
            {"seed", c.seed}};
  return j.dump(2);
}

ModelConfig config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ModelConfig c;
    c.encoder.hidden = j.at("hidden").get<int>();
    c.encoder.layers = j.at("layers").get<int>();
    c.encoder.heads = j.at("heads").get<int>();
    c.encoder.feed_forward = j.at("feed_forward").get<int>();
    c.encoder.max_positions = j.at("max_positions").get<int>();
    c.n_max = j.at("n_max").get<int>();
    c.m_max = j.at("m_max").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw RuntimeFailure(std::string("model config: ") + e.what());
  }
}

template <typename T>
HeadOutputs to_outputs(const HeadVars<T>& vars) {
  HeadOutputs out;
  for (Head h : kAllHeads) {
    if (!vars.has(h)) continue;
    const auto& v = vars[h].value();
    out[h].assign(v.data(), v.data() + v.size());
  }
  return out;
}

template <typename T>
ReasoningModel<T>::ReasoningModel(const ModelConfig& config, text::Vocab vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.encoder.max_positions = text::assembled_length(config_.n_max, config_.m_max);
  std::mt19937_64 rng(config_.seed);
  encoder_ = std::make_unique<text::Encoder<T>>(config_.encoder, static_cast<int>(vocab_.size()), params_, "encoder.", rng);
  heads_ = std::make_unique<ReasonHeads<T>>(config_.encoder.hidden, params_, kHeadPrefix, rng);
}

template <typename T>
text::AssembledPair ReasoningModel<T>::assemble(std::span<const std::string> knowledge,
                                                std::span<const std::string> statement) const {
  return text::assemble_pair(knowledge, statement, vocab_, config_.n_max, config_.m_max);
}

template <typename T>
HeadVars<T> ReasoningModel<T>::forward(const text::AssembledPair& input, HeadSet requested) const {
  if (input.n_max != config_.n_max || input.m_max != config_.m_max) {
    throw InvalidInput("ReasoningModel::forward: input lengths differ from model configuration");
  }
  auto want = [&](std::initializer_list<Head> hs) {
    for (Head h : hs) {
      if (requested.test(index(h))) return true;
    }
    return false;
  };
  HeadVars<T> vars;
  vars.encoded = text::encode(input, *encoder_);
  const auto& hb = vars.encoded.knowledge;
  const auto& hs = vars.encoded.statement;
  std::optional<std::pair<AttnVec<T>, AttnVec<T>>> cause_effect;
  if (want({Head::Cause, Head::Effect, Head::Polarity, Head::Comparison})) {
    cause_effect = heads_->find_cause_effect(hb, vars.encoded.knowledge_mask);
    vars.out[index(Head::Cause)] = cause_effect->first.probs;
    vars.out[index(Head::Effect)] = cause_effect->second.probs;
  }
  if (want({Head::Polarity})) {
    vars.out[index(Head::Polarity)] = heads_->polarity_check(hb, cause_effect->first, cause_effect->second).probs;
  }
  if (want({Head::World, Head::Value})) {
    const auto world = heads_->find_world(hs, vars.encoded.statement_mask);
    vars.out[index(Head::World)] = world.probs;
    if (want({Head::Value})) vars.out[index(Head::Value)] = heads_->value_prediction(hs, world).probs;
  }
  if (want({Head::World1, Head::World2, Head::Comparison})) {
    const auto [w1, w2] = heads_->find_worlds(hs, vars.encoded.statement_mask);
    vars.out[index(Head::World1)] = w1.probs;
    vars.out[index(Head::World2)] = w2.probs;
    if (want({Head::Comparison})) {
      vars.out[index(Head::Comparison)] = heads_->worlds_comparison(hb, cause_effect->first, hs, w1, w2).probs;
    }
  }
  if (want({Head::Type})) {
    vars.out[index(Head::Type)] = heads_->classify_type(hs, vars.encoded.statement_mask).probs;
  }
  return vars;
}

template <typename T>
HeadOutputs ReasoningModel<T>::infer(std::span<const std::string> knowledge,
                                     std::span<const std::string> statement) const {
  return to_outputs(forward(assemble(knowledge, statement)));
}

template <typename T>
void ReasoningModel<T>::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  diff::save_checkpoint(params_, dir / "params.qrck");
  vocab_.save(dir / "vocab.txt");
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + (dir / "model.json").string());
  out << config_to_json(config_) << '\n';
}

template <typename T>
std::unique_ptr<ReasoningModel<T>> ReasoningModel<T>::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw RuntimeFailure("cannot read " + (dir / "model.json").string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto model = std::make_unique<ReasoningModel<T>>(config_from_json(buf.str()), text::Vocab::load(dir / "vocab.txt"));
  diff::load_checkpoint(dir / "params.qrck", model->params());
  return model;
}

template class ReasoningModel<float>;
template class ReasoningModel<double>;
template HeadOutputs to_outputs(const HeadVars<float>&);
template HeadOutputs to_outputs(const HeadVars<double>&);

}  // namespace qreason::heads
