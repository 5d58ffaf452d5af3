#include "qreason/answerer/answerer.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qreason/diffcore/checkpoint.hpp"
#include "qreason/error.hpp"
#include "qreason/textenc/tokenizer.hpp"

namespace qreason::answer {

using nlohmann::json;

namespace {
std::atomic<std::size_t> g_ties{0};

std::vector<std::string> words(const std::string& s) { return text::token_texts(text::tokenize(s)); }
}  // namespace

std::string config_to_json(const AnswerConfig& c) {
  json j{{"hidden", c.encoder.hidden},
         {"layers", c.encoder.layers},
         {"heads", c.encoder.heads},
         {"feed_forward", c.encoder.feed_forward},
         {"max_positions", c.encoder.max_positions},
         {"text_max", c.text_max},
         {"qa_max", c.qa_max},
         {"seed", c.seed}};
  return j.dump(2);
}

AnswerConfig config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    AnswerConfig c;
    c.encoder.hidden = j.at("hidden").get<int>();
    c.encoder.layers = j.at("layers").get<int>();
    c.encoder.heads = j.at("heads").get<int>();
    c.encoder.feed_forward = j.at("feed_forward").get<int>();
    c.encoder.max_positions = j.at("max_positions").get<int>();
    c.text_max = j.at("text_max").get<int>();
    c.qa_max = j.at("qa_max").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw RuntimeFailure(std::string("answer config: ") + e.what());
  }
}

text::AssembledPair assemble_answer_input(std::span<const std::string> synthetic, std::span<const std::string> question,
                                          std::span<const std::string> option, const text::Vocab& vocab, int text_max,
                                          int qa_max) {
  if (question.empty() || option.empty()) throw InvalidInput("assemble_answer_input: empty question or option");
  const std::size_t room = static_cast<std::size_t>(std::max(qa_max - 1, 0));
  std::size_t keep_option = std::min(option.size(), room > 1 ? room - 1 : 0);
  std::size_t keep_question = std::min(question.size(), room - std::min(room, keep_option + 1));
  std::vector<std::string> second(question.begin(), question.begin() + static_cast<std::ptrdiff_t>(keep_question));
  second.emplace_back(kSeparator);
  second.insert(second.end(), option.begin(), option.begin() + static_cast<std::ptrdiff_t>(keep_option));
  auto out = text::assemble_pair(synthetic, second, vocab, text_max, qa_max);
  out.truncated = out.truncated || keep_question < question.size() || keep_option < option.size();
  return out;
}

template <typename T>
AnswerModel<T>::AnswerModel(const AnswerConfig& config, text::Vocab vocab) : config_(config), vocab_(std::move(vocab)) {
  config_.encoder.max_positions = text::assembled_length(config_.text_max, config_.qa_max);
  std::mt19937_64 rng(config_.seed);
  encoder_ = std::make_unique<text::Encoder<T>>(config_.encoder, static_cast<int>(vocab_.size()), params_, "encoder.", rng);
  const int d = config_.encoder.hidden;
  weight_ = params_.add_uniform(kScoreWeight, d, 1, d, rng);
  bias_ = params_.add_uniform(kScoreBias, 1, 1, d, rng, 1);
}

template <typename T>
text::AssembledPair AnswerModel<T>::assemble(const std::string& synthetic, const std::string& question,
                                             const std::string& option) const {
  return assemble_answer_input(words(synthetic), words(question), words(option), vocab_, config_.text_max,
                               config_.qa_max);
}

template <typename T>
diff::Var<T> AnswerModel<T>::logit(const text::AssembledPair& input) const {
  if (input.n_max != config_.text_max || input.m_max != config_.qa_max)
    throw InvalidInput("AnswerModel: input lengths differ from model configuration");
  const auto hidden = encoder_->forward(input.unpadded());
  return diff::affine(diff::slice_rows(hidden, 0, 1), weight_, bias_);
}

template <typename T>
diff::Var<T> AnswerModel<T>::probability(const text::AssembledPair& input) const {
  return diff::sigmoid(logit(input));
}

template <typename T>
double AnswerModel<T>::score(const std::string& synthetic, const std::string& question,
                             const std::string& option) const {
  return static_cast<double>(probability(assemble(synthetic, question, option)).item());
}

template <typename T>
void AnswerModel<T>::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  diff::save_checkpoint(params_, dir / "params.qrck");
  vocab_.save(dir / "vocab.txt");
  std::ofstream out(dir / "answer.json", std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + (dir / "answer.json").string());
  out << config_to_json(config_) << '\n';
}

template <typename T>
std::unique_ptr<AnswerModel<T>> AnswerModel<T>::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "answer.json");
  if (!in) throw RuntimeFailure("cannot read " + (dir / "answer.json").string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto model = std::make_unique<AnswerModel<T>>(config_from_json(buf.str()), text::Vocab::load(dir / "vocab.txt"));
  diff::load_checkpoint(dir / "params.qrck", model->params());
  return model;
}

template class AnswerModel<float>;
template class AnswerModel<double>;

template <typename T>
std::array<double, 2> ModelScorer<T>::score(const data::Example& example, const std::string& context) const {
  return {model_.score(context, example.instance.question, example.instance.options[0]),
          model_.score(context, example.instance.question, example.instance.options[1])};
}

template class ModelScorer<float>;
template class ModelScorer<double>;

AnswerPrediction choose(std::array<double, 2> scores) {
  AnswerPrediction p;
  p.scores = scores;
  p.index = scores[1] > scores[0] ? 1 : 0;
  p.tie = scores[0] == scores[1];
  if (p.tie) ++g_ties;
  return p;
}

AnswerPrediction predict_answer(const data::Example& example, const deduction::ReasoningTrace& trace,
                                const OptionScorer& scorer) {
  if (trace.synthetic.text.empty()) throw InvalidInput("predict_answer: trace has no synthetic text");
  return choose(scorer.score(example, trace.synthetic.text));
}

std::size_t tie_count() { return g_ties.load(); }
void reset_tie_count() { g_ties = 0; }

}  // namespace qreason::answer
