#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>

#include "qreason/datakit/dataset.hpp"
#include "qreason/datakit/generator.hpp"
#include "qreason/deduction/deduce.hpp"
#include "qreason/error.hpp"
#include "worked_examples.hpp"

using namespace qreason;
using namespace qreason::data;
using nlohmann::json;

namespace {

const std::filesystem::path kData = QREASON_TEST_DATA;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Directional vocabulary, written out independently of the generator.
int word_sign(const std::string& phrase) {
  static const std::set<std::string> up = {"greater", "larger", "higher", "more",  "increases", "rises",  "goes up",
                                           "grows",   "increase", "rise", "go up", "up",        "increasing",
                                           "raising", "raise",  "raises", "boosts", "high",     "large",  "great",
                                           "big",     "an increase", "a rise"};
  static const std::set<std::string> down = {"smaller",  "lower",      "less",      "decreases", "falls",     "goes down",
                                             "drops",    "decrease",   "fall",      "go down",   "down",      "decreasing",
                                             "reducing", "reduce",     "reduces",   "lowers",    "low",       "small",
                                             "little",   "a decrease", "a drop",    "reduced"};
  const auto p = lower(phrase);
  if (up.count(p)) return 1;
  if (down.count(p)) return -1;
  return 0;
}

std::string strip(std::string text, const std::string& part) {
  const auto pos = lower(text).find(lower(part));
  if (pos != std::string::npos) text.erase(pos, part.size());
  const auto first = text.find_first_not_of(' ');
  const auto last = text.find_last_not_of(' ');
  return first == std::string::npos ? "" : text.substr(first, last - first + 1);
}

int option_sign(std::string option, const std::string& effect) {
  option = strip(option, effect);
  for (const char* lead : {"it ", "get "}) {
    if (option.rfind(lead, 0) == 0) option = option.substr(std::string(lead).size());
  }
  return word_sign(option);
}

// Enumerates the correlation sign k consistent with the knowledge sentence,
// evaluates the question numerically and returns the option that matches.
std::optional<int> brute_force_answer(const Example& ex) {
  const auto& pa = ex.para_anno;
  const int cd = word_sign(pa.at("cause_dir_str").get<std::string>());
  const int ed = word_sign(pa.at("effect_dir_str").get<std::string>());
  if (cd == 0 || ed == 0) return std::nullopt;
  const std::string cause = pa.at("cause_prop"), effect = pa.at("effect_prop");
  std::vector<int> ks;
  for (int k : {1, -1}) {
    const int c0 = 0, c1 = cd;
    if ((k * c1 - k * c0 > 0 ? 1 : -1) == ed) ks.push_back(k);
  }
  if (ks.size() != 1) return std::nullopt;
  const int k = ks[0];

  int wanted = 0;
  const auto& lab = ex.labels;
  if (lab.type == Chain::Prediction) {
    const auto& toks = ex.statement_tokens;
    const auto world = text::detokenize(ex.statement, toks, static_cast<std::size_t>(lab.world->start),
                                        static_cast<std::size_t>(lab.world->end));
    const int dc = word_sign(strip(strip(world, cause), "the"));
    if (dc == 0) return std::nullopt;
    wanted = k * dc;
  } else {
    auto world_text = [&](const TokenSpan& s) {
      return text::detokenize(ex.statement, ex.statement_tokens, static_cast<std::size_t>(s.start),
                              static_cast<std::size_t>(s.end));
    };
    auto modifier = [&](const std::string& w) {
      const auto with = w.find(" with ");
      return word_sign(strip(w.substr(with + 6), cause));
    };
    const int c1 = modifier(world_text(*lab.world1));
    const int c2 = modifier(world_text(*lab.world2));
    if (c1 == 0 || c2 == 0 || c1 == c2) return std::nullopt;
    const std::string& q = ex.instance.question;
    const bool about_first = q.find("first one") != std::string::npos || q.rfind("Would", 0) == 0;
    const int e1 = k * c1, e2 = k * c2;
    wanted = about_first ? (e1 > e2 ? 1 : -1) : (e2 > e1 ? 1 : -1);
  }
  std::optional<int> answer;
  for (int i = 0; i < 2; ++i) {
    if (option_sign(ex.instance.options[static_cast<std::size_t>(i)], effect) == wanted) {
      if (answer) return std::nullopt;
      answer = i;
    }
  }
  return answer;
}

const SyntheticCorpus& small_corpus() {
  static const SyntheticCorpus c = [] {
    GeneratorConfig g;
    g.train = 600;
    g.dev = 120;
    g.test = 120;
    return generate_synthetic_corpus(g);
  }();
  return c;
}

std::string span_text(const Example& ex, Segment seg, const TokenSpan& s) {
  return text::detokenize(ex.source(seg), ex.tokens(seg), static_cast<std::size_t>(s.start),
                          static_cast<std::size_t>(s.end));
}

}  // namespace

TEST_CASE("polarity and type follow the annotation rules") {
  const json same = {{"cause_dir_sign", "MORE"}, {"effect_dir_sign", "MORE"}};
  const json opposite = {{"cause_dir_sign", "MORE"}, {"effect_dir_sign", "LESS"}};
  const json both_less = {{"cause_dir_sign", "LESS"}, {"effect_dir_sign", "LESS"}};
  const json compare = {{"more_effect_world", "a"}, {"less_effect_world", "b"}};
  const json predict = {{"effect_dir_sign", "MORE"}};
  CHECK(derive_supervision(same, compare).polarity == Polarity::Positive);
  CHECK(derive_supervision(both_less, compare).polarity == Polarity::Positive);
  CHECK(derive_supervision(opposite, compare).polarity == Polarity::Negative);
  CHECK(derive_supervision(same, compare).type == Chain::Comparison);
  CHECK(derive_supervision(same, predict).type == Chain::Prediction);
  CHECK(derive_supervision(same, json{{"more_effect_dir", "x"}}).type == Chain::Prediction);
  CHECK_FALSE(derive_supervision(same, json()).type.has_value());
  CHECK_FALSE(derive_supervision(json{{"cause_dir_sign", "MORE"}}, json()).polarity.has_value());
  CHECK_FALSE(derive_supervision(json{{"cause_dir_sign", "MORE"}, {"effect_dir_sign", "maybe"}}, json()).polarity);
}

TEST_CASE("sign parsing") {
  CHECK(parse_sign("MORE") == 1);
  CHECK(parse_sign("less") == -1);
  CHECK(parse_sign(-1) == -1);
  CHECK(parse_sign("+") == 1);
  CHECK_FALSE(parse_sign("sideways").has_value());
  CHECK_FALSE(parse_sign(json()).has_value());
}

TEST_CASE("annotated fixture file") {
  const auto ds = load_dataset(kData / "annotated_records.jsonl");
  REQUIRE(ds.size() == 6);
  CHECK(ds.alignment_warnings == 1);

  const auto& planet = ds.examples[0];
  CHECK(planet.instance.question == "Compared to a small planet, would a huge planet have");
  CHECK(planet.instance.options[1] == "less gravitational pull");
  CHECK(planet.instance.answer == 0);
  CHECK(planet.labels.polarity == Polarity::Positive);
  CHECK(planet.labels.type == Chain::Comparison);
  REQUIRE(planet.labels.cause.has_value());
  CHECK(span_text(planet, Segment::Knowledge, *planet.labels.cause) == "mass");
  CHECK(span_text(planet, Segment::Knowledge, *planet.labels.effect) == "gravitational pull");
  CHECK(planet.labels.answer == 0);

  const auto& sound = ds.examples[1];
  CHECK(sound.labels.polarity == Polarity::Negative);
  CHECK(sound.labels.type == Chain::Prediction);
  CHECK(sound.instance.answer == 1);

  const auto& wire = ds.examples[2];
  CHECK(wire.labels.polarity == Polarity::Positive);
  CHECK_FALSE(wire.labels.type.has_value());
  CHECK_FALSE(wire.labels.available(Head::Type));

  const auto& bare = ds.examples[3];
  for (Head h : kAllHeads) CHECK_FALSE(bare.labels.available(h));
  CHECK(bare.labels.answer == 0);

  const auto& odd = ds.examples[4];
  CHECK_FALSE(odd.labels.polarity.has_value());
  CHECK(odd.labels.type == Chain::Prediction);
  CHECK(odd.extra.at("source_note") == "kept as is");

  const auto& tea = ds.examples[5];
  CHECK_FALSE(tea.labels.cause.has_value());
  CHECK(tea.labels.effect.has_value());
  CHECK(tea.labels.polarity == Polarity::Positive);
}

TEST_CASE("alignment picks the occurrence nearest a correlation keyword") {
  const auto toks = text::tokenize("Heat moves fast. The more heat, the more motion.");
  const auto s = align_annotation(toks, "heat");
  REQUIRE(s.has_value());
  CHECK(s->start == 6);
  CHECK_FALSE(align_annotation(toks, "light").has_value());
  const auto single = align_annotation(toks, "Moves fast");
  REQUIRE(single.has_value());
  CHECK(single->start == 1);
  CHECK(single->end == 2);
  CHECK(is_correlation_keyword("greater"));
  CHECK_FALSE(is_correlation_keyword("planet"));
}

TEST_CASE("malformed lines report their line number") {
  try {
    parse_dataset("{\"id\":\"a\",\"para\":\"x\",\"question\":\"q\",\"options\":[\"a\",\"b\"],\"answer\":0}\n{not json\n");
    FAIL("expected an error");
  } catch (const RuntimeFailure& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_dataset("{\"id\":\"a\",\"question\":\"q\",\"options\":[\"a\"]}\n"), RuntimeFailure);
  CHECK_THROWS_AS(parse_dataset("{\"id\":\"a\",\"para\":\"p\",\"question\":\"q\",\"options\":[\"a\",\"b\"],\"answer\":3}\n"),
                  RuntimeFailure);
  CHECK(parse_dataset("\n\n").empty());
}

TEST_CASE("explicit labels override and round trip") {
  const std::string line =
      R"({"id":"x1","para":"The more sun, the more growth.","question":"A plant with more sun will have",)"
      R"("options":["more growth","less growth"],"answer":0,)"
      R"("labels":{"cause":"sun","effect":{"start":6,"end":6},"world":{"text":"more sun"},"polarity":"+",)"
      R"("value":"increase","type":"Prediction"}})";
  const auto ds = parse_dataset(line + "\n");
  REQUIRE(ds.size() == 1);
  const auto& ex = ds.examples[0];
  CHECK(ex.labels.cause == TokenSpan{2, 2});
  CHECK(ex.labels.effect == TokenSpan{6, 6});
  CHECK(span_text(ex, Segment::Statement, *ex.labels.world) == "more sun");
  CHECK(ex.labels.value == ValueChange::Increase);
  const auto back = parse_dataset(serialize_dataset(ds.examples));
  CHECK(back.examples[0].labels == ex.labels);
  CHECK(back.examples[0].instance == ex.instance);
}

TEST_CASE("save and load round trip every known field") {
  auto ds = load_dataset(kData / "annotated_records.jsonl");
  for (const auto& row : testing::worked_examples()) ds.examples.push_back(row.example);
  ds.examples.insert(ds.examples.end(), small_corpus().dev.examples.begin(), small_corpus().dev.examples.begin() + 20);
  const auto path = std::filesystem::temp_directory_path() / "qreason_roundtrip.jsonl";
  save_dataset(path, ds.examples);
  const auto back = load_dataset(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CAPTURE(ds.examples[i].instance.id);
    CHECK(back.examples[i].instance == ds.examples[i].instance);
    CHECK(back.examples[i].labels == ds.examples[i].labels);
    CHECK(back.examples[i].para_anno == ds.examples[i].para_anno);
    CHECK(back.examples[i].question_anno == ds.examples[i].question_anno);
    CHECK(back.examples[i].extra == ds.examples[i].extra);
  }
  CHECK(serialize_dataset(back.examples) == serialize_dataset(ds.examples));
}

TEST_CASE("generator sizes, ratio and completeness") {
  GeneratorConfig g;
  const auto corpus = generate_synthetic_corpus(g);
  CHECK(corpus.train.size() == 2000);
  CHECK(corpus.dev.size() == 400);
  CHECK(corpus.test.size() == 400);
  const auto comparisons = std::count_if(corpus.train.examples.begin(), corpus.train.examples.end(),
                                         [](const Example& e) { return e.labels.type == Chain::Comparison; });
  CHECK(static_cast<std::size_t>(comparisons) == comparison_count(2000, 2296, 400));
  CHECK(comparison_count(2000, 2296, 400) == 297);
  for (const auto& ex : corpus.train.examples) {
    const auto& l = ex.labels;
    CHECK((l.cause && l.effect && l.polarity && l.type && l.answer));
    if (l.type == Chain::Prediction) {
      CHECK((l.world && l.value));
    } else {
      CHECK((l.world1 && l.world2 && l.comparison));
    }
  }
  CHECK(knowledge_template_count() >= 8);
  CHECK(Lexicon::builtin().pairs.size() >= 40);
}

TEST_CASE("generator is deterministic per seed") {
  GeneratorConfig g;
  g.train = 150;
  g.dev = 30;
  g.test = 30;
  const auto a = generate_synthetic_corpus(g);
  const auto b = generate_synthetic_corpus(g);
  CHECK(serialize_dataset(a.train.examples) == serialize_dataset(b.train.examples));
  CHECK(serialize_dataset(a.test.examples) == serialize_dataset(b.test.examples));
  g.seed = 14;
  const auto c = generate_synthetic_corpus(g);
  CHECK(serialize_dataset(a.train.examples) != serialize_dataset(c.train.examples));
}

TEST_CASE("splits use disjoint property pairs") {
  const auto& c = small_corpus();
  auto props = [](const Dataset& d) {
    std::set<std::string> s;
    for (const auto& e : d.examples) s.insert(lower(e.para_anno.at("cause_prop").get<std::string>()));
    return s;
  };
  const auto tr = props(c.train), dv = props(c.dev), te = props(c.test);
  for (const auto& p : dv) CHECK(tr.count(p) == 0);
  for (const auto& p : te) {
    CHECK(tr.count(p) == 0);
    CHECK(dv.count(p) == 0);
  }
  CHECK_THROWS_AS(generate_synthetic_corpus(GeneratorConfig{}, Lexicon{{Lexicon::builtin().pairs[0]}}), InvalidInput);
}

TEST_CASE("gold spans are exact source substrings") {
  for (const Dataset* d : {&small_corpus().train, &small_corpus().test}) {
    for (const auto& ex : d->examples) {
      for (Head h : kAllHeads) {
        if (!is_span_head(h) || !ex.labels.span(h)) continue;
        const auto s = span_text(ex, segment_of(h), *ex.labels.span(h));
        CHECK(ex.source(segment_of(h)).find(s) != std::string::npos);
      }
      CHECK(lower(span_text(ex, Segment::Knowledge, *ex.labels.cause)) ==
            lower(ex.para_anno.at("cause_prop").get<std::string>()));
    }
  }
}

TEST_CASE("gold labels deduce the gold answer") {
  for (const auto& ex : small_corpus().train.examples) {
    const auto& l = ex.labels;
    const auto dir = l.type == Chain::Prediction ? deduction::deduce_prediction(*l.polarity, *l.value)
                                                 : deduction::deduce_comparison(*l.polarity, *l.comparison);
    const auto subject = ex.question_anno.value("asks_about", std::string("world"));
    const auto d = (subject == "world2") ? (dir == Direction::More ? Direction::Less : Direction::More) : dir;
    const auto want = d == Direction::More ? "MORE" : "LESS";
    CHECK(ex.question_anno.at("option_directions").at(static_cast<std::size_t>(*l.answer)) == want);
  }
}

TEST_CASE("gold answers agree with a brute-force evaluator") {
  std::size_t checked = 0;
  for (const Dataset* d : {&small_corpus().train, &small_corpus().dev, &small_corpus().test}) {
    for (const auto& ex : d->examples) {
      CAPTURE(ex.instance.id);
      const auto oracle = brute_force_answer(ex);
      REQUIRE(oracle.has_value());
      CHECK(*oracle == ex.instance.answer);
      ++checked;
    }
  }
  CHECK(checked == 840);
}

TEST_CASE("generator config file and validation") {
  GeneratorConfig g;
  g.train = 10;
  g.seed = 5;
  g.knowledge_templates = {0, 3};
  const auto back = generator_config_from_json(to_json(g));
  CHECK(back.train == 10);
  CHECK(back.seed == 5);
  CHECK(back.knowledge_templates == std::vector<int>{0, 3});
  g.train = 0;
  CHECK_THROWS_AS(g.validate(), InvalidInput);
  GeneratorConfig bad;
  bad.knowledge_templates = {99};
  CHECK_THROWS_AS(generate_synthetic_corpus(bad), InvalidInput);
  CHECK(Lexicon::from_json(Lexicon::builtin().to_json()).pairs == Lexicon::builtin().pairs);
}
