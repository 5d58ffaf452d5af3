#include <doctest.h>

#include <filesystem>

#include "qreason/answerer/answerer.hpp"
#include "qreason/deduction/chain.hpp"
#include "qreason/error.hpp"
#include "worked_examples.hpp"

using namespace qreason;
using namespace qreason::answer;

namespace {

std::vector<std::string> words(std::string_view s) { return text::token_texts(text::tokenize(s)); }

text::Vocab vocab_for(const std::vector<testing::WorkedExample>& rows) {
  std::vector<std::string> corpus = {";"};
  for (const auto& r : rows) {
    for (const auto& w : words(r.deduction)) corpus.push_back(w);
    for (const auto& w : r.example.statement_words()) corpus.push_back(w);
  }
  return text::Vocab::build(corpus, 1);
}

AnswerConfig tiny_config() {
  AnswerConfig c;
  c.encoder.hidden = 8;
  c.encoder.heads = 2;
  c.encoder.layers = 1;
  c.encoder.feed_forward = 16;
  c.encoder.max_positions = text::assembled_length(c.text_max, c.qa_max);
  return c;
}

class FixedScorer : public OptionScorer {
 public:
  explicit FixedScorer(std::array<double, 2> s) : s_(s) {}
  std::array<double, 2> score(const data::Example&, const std::string&) const override { return s_; }

 private:
  std::array<double, 2> s_;
};

}  // namespace

TEST_CASE("answer input layout") {
  const auto rows = testing::worked_examples();
  const auto v = vocab_for(rows);
  const auto& ex = rows[0].example;
  const auto syn = words(rows[0].deduction);
  const auto q = words(ex.instance.question);
  const auto a = assemble_answer_input(syn, q, words(ex.instance.options[0]), v, 48, 64);
  const auto b = assemble_answer_input(syn, q, words(ex.instance.options[1]), v, 48, 64);
  CHECK(a.ids[0] == text::Vocab::kBegin);
  CHECK_FALSE(a.truncated);
  CHECK_FALSE(b.truncated);
  const auto sep = static_cast<std::size_t>(a.second_offset) + q.size();
  CHECK(a.ids[sep] == v.id(";"));
  for (std::size_t i = 0; i <= sep; ++i) CHECK(a.ids[i] == b.ids[i]);
  CHECK(a.ids != b.ids);
}

TEST_CASE("long questions are trimmed and the option survives") {
  const auto rows = testing::worked_examples();
  const auto v = vocab_for(rows);
  std::vector<std::string> q(100, "mass");
  const auto opt = words("Increases");
  const auto a = assemble_answer_input(words(rows[0].deduction), q, opt, v, 48, 20);
  CHECK(a.truncated);
  const auto last = static_cast<std::size_t>(a.length) - 2;
  CHECK(a.ids[last] == v.id("increases"));
  CHECK(a.ids[last - 1] == v.id(";"));
}

TEST_CASE("scores lie in (0, 1) and zero weights give one half") {
  const auto rows = testing::worked_examples();
  AnswerModel<double> model(tiny_config(), vocab_for(rows));
  for (const auto& r : rows) {
    for (const auto& opt : r.example.instance.options) {
      const double s = model.score(r.deduction, r.example.instance.question, opt);
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
  }
  auto w = model.params().get(AnswerModel<double>::kScoreWeight);
  auto b = model.params().get(AnswerModel<double>::kScoreBias);
  w.mutable_value().setZero();
  b.mutable_value().setZero();
  for (const auto& r : rows) CHECK(model.score(r.deduction, r.example.instance.question, "x") == 0.5);
}

TEST_CASE("answer model save and load") {
  const auto rows = testing::worked_examples();
  AnswerModel<float> model(tiny_config(), vocab_for(rows));
  const auto dir = std::filesystem::temp_directory_path() / "qreason_answer_test";
  std::filesystem::remove_all(dir);
  model.save(dir);
  const auto back = AnswerModel<float>::load(dir);
  const auto& r = rows[2];
  CHECK(back->score(r.deduction, r.example.instance.question, r.example.instance.options[0]) ==
        model.score(r.deduction, r.example.instance.question, r.example.instance.options[0]));
  CHECK(back->config().qa_max == model.config().qa_max);
  std::filesystem::remove_all(dir);
  CHECK(config_from_json(config_to_json(tiny_config())).encoder.hidden == 8);
}

TEST_CASE("choose takes the argmax and sends ties to option 0") {
  reset_tie_count();
  CHECK(choose({0.9, 0.2}).index == 0);
  CHECK(choose({0.2, 0.9}).index == 1);
  const auto t = choose({0.4, 0.4});
  CHECK(t.index == 0);
  CHECK(t.tie);
  CHECK(tie_count() == 1);
}

TEST_CASE("predict_answer passes the trace text to the scorer") {
  const auto rows = testing::worked_examples();
  const auto trace = deduction::run_chain(rows[0].example, deduction::OracleReasoner{});
  CHECK(predict_answer(rows[0].example, trace, FixedScorer({0.1, 0.7})).index == 1);

  class Echo : public OptionScorer {
   public:
    std::array<double, 2> score(const data::Example&, const std::string& context) const override {
      return context.find("more") != std::string::npos ? std::array<double, 2>{0.2, 0.8}
                                                       : std::array<double, 2>{0.8, 0.2};
    }
  };
  // "Decreases" / "Increases": a trace saying more picks option 1
  CHECK(predict_answer(rows[0].example, trace, Echo{}).index == 1);
  const auto flipped = deduction::run_chain(rows[1].example, deduction::OracleReasoner{});
  CHECK(predict_answer(rows[1].example, flipped, Echo{}).index == 0);
}
