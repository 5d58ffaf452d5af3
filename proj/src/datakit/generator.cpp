#include "qreason/datakit/generator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <utility>

#include "qreason/error.hpp"

namespace qreason::data {

using nlohmann::json;

namespace {

struct Family {
  std::vector<std::string> up, down;
};

const std::map<std::string, Family>& families() {
  static const std::map<std::string, Family> f = {
      {"cmp", {{"greater", "larger", "higher", "more"}, {"smaller", "lower", "less"}}},
      {"Cmp", {{"Higher", "Greater", "More"}, {"Lower", "Less", "Reduced"}}},
      {"vi", {{"increases", "rises", "goes up", "grows"}, {"decreases", "falls", "goes down", "drops"}}},
      {"vb", {{"increase", "rise", "go up"}, {"decrease", "fall", "go down"}}},
      {"Noun", {{"An increase", "A rise"}, {"A decrease", "A drop"}}},
      {"noun", {{"an increase", "a rise"}, {"a decrease", "a drop"}}},
      {"ud", {{"up"}, {"down"}}},
      {"ml", {{"more"}, {"less"}}},
      {"more_only", {{"more"}, {}}},
      {"hl", {{"higher"}, {"lower"}}},
      {"Ing", {{"Increasing", "Raising"}, {"Decreasing", "Reducing"}}},
      {"vt", {{"increase", "raise"}, {"decrease", "lower", "reduce"}}},
      {"vt3", {{"increases", "raises", "boosts"}, {"decreases", "reduces", "lowers"}}},
      {"amount", {{"more", "higher", "greater"}, {"less", "lower"}}},
      {"hi_lo", {{"high", "large", "great", "big"}, {"low", "small", "little"}}},
  };
  return f;
}

struct KnowledgeTemplate {
  const char* text;
  const char* cause_family;
  const char* effect_family;
};

const std::vector<KnowledgeTemplate>& knowledge_templates() {
  static const std::vector<KnowledgeTemplate> t = {
      {"The {cd} the [cause:{C}], the {ed} the [effect:{E}].", "cmp", "cmp"},
      {"[effect:{^E}] {ed} with {cd} [cause:{C}].", "more_only", "vi"},
      {"[effect:{^E}] {ed} as [cause:{C}] {cd}.", "vi", "vi"},
      {"{cd} [cause:{C}] leads to {ed} [effect:{E}].", "Cmp", "cmp"},
      {"If the [cause:{C}] {cd}, the [effect:{E}] will {ed}.", "vi", "vb"},
      {"{cd} in [cause:{C}] causes {ed} in [effect:{E}].", "Noun", "noun"},
      {"When [cause:{C}] goes {cd}, [effect:{E}] goes {ed}.", "ud", "ud"},
      {"Things with {cd} [cause:{C}] have {ed} [effect:{E}].", "ml", "ml"},
      {"[effect:{^E}] is {ed} when [cause:{C}] is {cd}.", "hl", "hl"},
      {"{cd} the [cause:{C}] will {ed} the [effect:{E}].", "Ing", "vt"},
      {"A {cd} [cause:{C}] results in a {ed} [effect:{E}].", "hl", "hl"},
  };
  return t;
}

using OptionPair = std::pair<const char*, const char*>;  // (effect goes up, effect goes down)

struct PredictionTemplate {
  const char* text;
  const char* value_family;
  std::vector<OptionPair> options;
};

const std::vector<PredictionTemplate>& prediction_templates() {
  static const std::vector<PredictionTemplate> t = {
      {"As the [world:{C} {v}], the {E} will", "vi", {{"increase", "decrease"}, {"go up", "go down"}}},
      {"{Name} [world:{v} the {C}] of the {ent}. What happens to the {E}?", "vt3",
       {{"it increases", "it decreases"}, {"it goes up", "it goes down"}}},
      {"If the [world:{C} {v}], the {E} of the {ent} will", "vi", {{"increase", "decrease"}, {"rise", "fall"}}},
      {"{Name} noticed that the [world:{C} {v}]. The {E} would", "vi",
       {{"increase", "decrease"}, {"get higher", "get lower"}}},
      {"{A} {ent} with [world:{v} {C}] will have", "amount", {{"more {E}", "less {E}"}, {"higher {E}", "lower {E}"}}},
      {"What happens to the {E} when the [world:{C} {v}]?", "vi", {{"it increases", "it decreases"}}},
  };
  return t;
}

struct ComparisonTemplate {
  const char* text;
  int subject;  // which world the options describe
  std::vector<OptionPair> options;
};

const std::vector<ComparisonTemplate>& comparison_templates() {
  static const std::vector<ComparisonTemplate> t = {
      {"Compared to {a1} [world1:{W1}], would {a2} [world2:{W2}] have more {E} or less {E}?", 2,
       {{"more {E}", "less {E}"}}},
      {"Would {a1} [world1:{W1}] have more or less {E} than {a2} [world2:{W2}]?", 1, {{"more", "less"}}},
      {"{Name} compared {a1} [world1:{W1}] and {a2} [world2:{W2}]. The first one will have", 1,
       {{"more {E}", "less {E}"}, {"higher {E}", "lower {E}"}}},
      {"Unlike {a1} [world1:{W1}], {a2} [world2:{W2}] will have", 2,
       {{"more {E}", "less {E}"}, {"higher {E}", "lower {E}"}}},
      {"{A1} [world1:{W1}] and {a2} [world2:{W2}] are tested. The second one should show", 2,
       {{"higher {E}", "lower {E}"}, {"more {E}", "less {E}"}}},
  };
  return t;
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"Tom", "Mary", "John", "Ana", "Lee", "Sam", "Priya", "Omar", "Kim", "Jose"};
  return n;
}

const std::vector<std::string>& fillers() {
  static const std::vector<std::string> f = {"Scientists have studied this for a long time.",
                                             "This is a well known fact.", "Many experiments confirm this.",
                                             "Students learn this in school."};
  return f;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  bool coin() { return (engine_() >> 11) & 1; }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string article(const std::string& word) {
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.empty() ? 'x' : word[0])));
  return std::string("aeiou").find(c) != std::string::npos ? "an" : "a";
}

using Slots = std::map<std::string, std::string>;

struct Rendered {
  std::string text;
  std::map<std::string, std::pair<std::size_t, std::size_t>> regions;
};

Rendered render(std::string_view tmpl, const Slots& slots) {
  Rendered out;
  std::string open_label;
  std::size_t open_at = 0;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '{') {
      const std::size_t close = tmpl.find('}', i);
      std::string key(tmpl.substr(i + 1, close - i - 1));
      bool cap = false;
      if (!key.empty() && key[0] == '^') {
        cap = true;
        key.erase(0, 1);
      }
      auto it = slots.find(key);
      if (it == slots.end()) throw RuntimeFailure("template slot '" + key + "' not filled");
      out.text += cap ? capitalize(it->second) : it->second;
      i = close;
    } else if (c == '[') {
      const std::size_t colon = tmpl.find(':', i);
      open_label = std::string(tmpl.substr(i + 1, colon - i - 1));
      open_at = out.text.size();
      i = colon;
    } else if (c == ']') {
      out.regions[open_label] = {open_at, out.text.size()};
    } else {
      out.text += c;
    }
  }
  return out;
}

TokenSpan region_span(const std::vector<text::Token>& toks, std::pair<std::size_t, std::size_t> region) {
  int first = -1, last = -1;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].begin >= region.first && toks[i].end <= region.second) {
      if (first < 0) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first < 0) throw RuntimeFailure("generator produced an empty span");
  return {first, last};
}

std::string_view sign_name(int s) { return s > 0 ? "MORE" : "LESS"; }

struct Draw {
  int sign;
  std::string word;
};

Draw draw_direction(const std::string& family_name, Rng& rng, double up_probability = 0.5) {
  const Family& f = families().at(family_name);
  const bool up = f.down.empty() || rng.unit() < up_probability;
  return {up ? 1 : -1, rng.pick(up ? f.up : f.down)};
}

std::string draw_word(const std::string& family_name, int sign, Rng& rng) {
  const Family& f = families().at(family_name);
  return rng.pick(sign > 0 ? f.up : f.down);
}

struct Knowledge {
  std::string text;
  std::pair<std::size_t, std::size_t> cause, effect;
  int cause_sign, effect_sign;
  std::string cause_word, effect_word;
};

Knowledge relation_sentence(const PropertyPair& pair, const std::vector<int>& allowed, const GeneratorConfig& cfg,
                            Rng& rng) {
  const auto& kt = knowledge_templates()[static_cast<std::size_t>(allowed[rng.below(allowed.size())])];
  const Draw cd = draw_direction(kt.cause_family, rng, cfg.cause_increase_probability);
  const Draw ed = draw_direction(kt.effect_family, rng);
  Rendered r = render(kt.text, {{"C", pair.cause}, {"E", pair.effect}, {"cd", cd.word}, {"ed", ed.word}});
  return {r.text, r.regions.at("cause"), r.regions.at("effect"), cd.sign, ed.sign, cd.word, ed.word};
}

void prepend(Knowledge& k, const std::string& sentence) {
  const std::size_t shift = sentence.size() + 1;
  k.text = sentence + " " + k.text;
  k.cause = {k.cause.first + shift, k.cause.second + shift};
  k.effect = {k.effect.first + shift, k.effect.second + shift};
}

Knowledge make_knowledge(const PropertyPair& pair, const std::vector<PropertyPair>& pairs,
                         const std::vector<int>& allowed, const GeneratorConfig& cfg, Rng& rng) {
  Knowledge k = relation_sentence(pair, allowed, cfg, rng);
  if (pairs.size() > 1 && rng.unit() < cfg.distractor_probability) {
    const PropertyPair* other = &pair;
    while (*other == pair) other = &rng.pick(pairs);
    const std::string distractor = relation_sentence(*other, allowed, cfg, rng).text;
    if (rng.coin()) prepend(k, distractor);
    else k.text += " " + distractor;
  }
  if (rng.unit() < cfg.filler_probability) {
    const std::string& filler = rng.pick(fillers());
    if (rng.coin()) prepend(k, filler);
    else k.text += " " + filler;
  }
  return k;
}

std::pair<std::array<std::string, 2>, int> place_options(const OptionPair& pair, const Slots& slots, int effect_dir,
                                                         Rng& rng, json& directions) {
  std::array<std::string, 2> opts = {render(pair.first, slots).text, render(pair.second, slots).text};
  std::array<int, 2> dirs = {1, -1};
  if (rng.coin()) {
    std::swap(opts[0], opts[1]);
    std::swap(dirs[0], dirs[1]);
  }
  directions = json::array({std::string(sign_name(dirs[0])), std::string(sign_name(dirs[1]))});
  return {opts, dirs[0] == effect_dir ? 0 : 1};
}

Example build_example(std::string id, const Knowledge& k, std::string question, std::array<std::string, 2> options,
                      int answer) {
  Instance inst;
  inst.id = std::move(id);
  inst.knowledge = k.text;
  inst.question = std::move(question);
  inst.options = std::move(options);
  inst.answer = answer;
  Example ex = prepare(std::move(inst));
  ex.labels.answer = answer;
  ex.labels.cause = region_span(ex.knowledge_tokens, k.cause);
  ex.labels.effect = region_span(ex.knowledge_tokens, k.effect);
  ex.labels.polarity = k.cause_sign == k.effect_sign ? Polarity::Positive : Polarity::Negative;
  return ex;
}

json para_annotation(const PropertyPair& pair, const Knowledge& k) {
  return json{{"cause_prop", pair.cause},
              {"effect_prop", pair.effect},
              {"cause_dir_str", k.cause_word},
              {"effect_dir_str", k.effect_word},
              {"cause_dir_sign", sign_name(k.cause_sign)},
              {"effect_dir_sign", sign_name(k.effect_sign)}};
}

Example make_prediction(const std::string& id, const PropertyPair& pair, const std::vector<PropertyPair>& pairs,
                        const GeneratorConfig& cfg, const std::vector<int>& allowed, Rng& rng) {
  const Knowledge k = make_knowledge(pair, pairs, allowed, cfg, rng);
  const auto& pt = rng.pick(prediction_templates());
  const Draw v = draw_direction(pt.value_family, rng);
  const std::string& ent = rng.pick(pair.entities);
  Slots slots{{"C", pair.cause}, {"E", pair.effect}, {"v", v.word}, {"ent", ent},
              {"a", article(ent)},  {"A", capitalize(article(ent))}, {"Name", rng.pick(names())}};
  const Rendered q = render(pt.text, slots);
  const int effect_dir = k.cause_sign * k.effect_sign * v.sign;
  json directions;
  auto [opts, answer] = place_options(rng.pick(pt.options), slots, effect_dir, rng, directions);

  Example ex = build_example(id, k, q.text, opts, answer);
  ex.labels.world = region_span(ex.statement_tokens, q.regions.at("world"));
  ex.labels.value = v.sign > 0 ? ValueChange::Increase : ValueChange::Decrease;
  ex.labels.type = Chain::Prediction;
  ex.para_anno = para_annotation(pair, k);
  const auto w = q.regions.at("world");
  ex.question_anno = json{{"effect_prop", pair.effect},
                          {"world", q.text.substr(w.first, w.second - w.first)},
                          {"world_dir_sign", sign_name(v.sign)},
                          {"effect_dir_sign", sign_name(effect_dir)},
                          {"asks_about", "world"},
                          {"option_directions", directions}};
  return ex;
}

Example make_comparison(const std::string& id, const PropertyPair& pair, const std::vector<PropertyPair>& pairs,
                        const GeneratorConfig& cfg, const std::vector<int>& allowed, Rng& rng) {
  const Knowledge k = make_knowledge(pair, pairs, allowed, cfg, rng);
  const auto& ct = rng.pick(comparison_templates());
  const int w1_sign = rng.coin() ? 1 : -1;
  const std::string& e1 = rng.pick(pair.entities);
  const std::string& e2 = rng.pick(pair.entities);
  const std::string w1 = e1 + " with " + draw_word("hi_lo", w1_sign, rng) + " " + pair.cause;
  const std::string w2 = e2 + " with " + draw_word("hi_lo", -w1_sign, rng) + " " + pair.cause;
  Slots slots{{"C", pair.cause},
              {"E", pair.effect},
              {"W1", w1},
              {"W2", w2},
              {"a1", article(e1)},
              {"A1", capitalize(article(e1))},
              {"a2", article(e2)},
              {"Name", rng.pick(names())}};
  const Rendered q = render(ct.text, slots);
  const int polarity = k.cause_sign * k.effect_sign;
  const int w1_effect = polarity * w1_sign;
  const int subject_effect = ct.subject == 1 ? w1_effect : -w1_effect;
  json directions;
  auto [opts, answer] = place_options(rng.pick(ct.options), slots, subject_effect, rng, directions);

  Example ex = build_example(id, k, q.text, opts, answer);
  ex.labels.world1 = region_span(ex.statement_tokens, q.regions.at("world1"));
  ex.labels.world2 = region_span(ex.statement_tokens, q.regions.at("world2"));
  ex.labels.comparison = w1_sign > 0 ? Ordering::World1Greater : Ordering::World1Less;
  ex.labels.type = Chain::Comparison;
  ex.para_anno = para_annotation(pair, k);
  ex.question_anno = json{{"effect_prop", pair.effect},
                          {"more_effect_world", w1_effect > 0 ? w1 : w2},
                          {"less_effect_world", w1_effect > 0 ? w2 : w1},
                          {"world1_cause_sign", sign_name(w1_sign)},
                          {"asks_about", ct.subject == 1 ? "world1" : "world2"},
                          {"option_directions", directions}};
  return ex;
}

Dataset generate_split(const std::string& split, std::size_t n, const std::vector<PropertyPair>& pairs,
                       const GeneratorConfig& cfg, const std::vector<int>& allowed, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n_cmp = comparison_count(n, cfg.prediction_weight, cfg.comparison_weight);
  std::vector<char> is_cmp(n, 0);
  std::fill(is_cmp.begin(), is_cmp.begin() + static_cast<std::ptrdiff_t>(n_cmp), 1);
  shuffle(is_cmp, rng);
  Dataset ds;
  ds.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    const std::string id = "SYN-" + split + "-" + buf;
    const PropertyPair& pair = rng.pick(pairs);
    ds.examples.push_back(is_cmp[i] ? make_comparison(id, pair, pairs, cfg, allowed, rng)
                                    : make_prediction(id, pair, pairs, cfg, allowed, rng));
  }
  return ds;
}

}  // namespace

std::size_t knowledge_template_count() { return knowledge_templates().size(); }
std::size_t prediction_template_count() { return prediction_templates().size(); }
std::size_t comparison_template_count() { return comparison_templates().size(); }

std::size_t comparison_count(std::size_t n, double prediction_weight, double comparison_weight) {
  const double share = comparison_weight / (prediction_weight + comparison_weight);
  return std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * share)));
}

Lexicon Lexicon::builtin() {
  static const std::vector<PropertyPair> pairs = {
      {"mass", "gravitational pull", {"planet", "star", "moon"}},
      {"speed", "kinetic energy", {"car", "truck", "bicycle"}},
      {"temperature", "evaporation rate", {"lake", "pond"}},
      {"distance", "gravitational force", {"satellite", "comet"}},
      {"mirror size", "light collected", {"telescope"}},
      {"altitude", "air pressure", {"city", "mountain camp"}},
      {"voltage", "current", {"circuit", "battery"}},
      {"resistance", "heat produced", {"wire", "resistor"}},
      {"depth", "water pressure", {"diver", "submarine"}},
      {"frequency", "wavelength", {"wave", "signal"}},
      {"exercise", "muscle strength", {"athlete", "person"}},
      {"sunlight", "plant growth", {"garden", "field"}},
      {"carbon dioxide", "global temperature", {"planet", "atmosphere"}},
      {"friction", "heat generated", {"surface", "brake"}},
      {"population", "water demand", {"city", "town"}},
      {"slope", "runoff speed", {"hill", "road"}},
      {"amplitude", "loudness", {"sound wave", "speaker"}},
      {"surface area", "cooling rate", {"pan", "radiator"}},
      {"pollution", "species diversity", {"river", "forest"}},
      {"age", "bone density", {"person", "patient"}},
      {"salt content", "boiling point", {"solution", "soup"}},
      {"insulation", "heat loss", {"house", "building"}},
      {"fertilizer", "crop yield", {"farm", "field"}},
      {"thickness", "strength", {"rope", "beam"}},
      {"string length", "pitch", {"guitar", "violin"}},
      {"humidity", "sweat evaporation", {"room", "climate"}},
      {"coil turns", "magnetic strength", {"electromagnet", "coil"}},
      {"force", "acceleration", {"cart", "ball"}},
      {"height", "potential energy", {"ball", "rock"}},
      {"charge", "electric force", {"particle", "sphere"}},
      {"rainfall", "erosion", {"hillside", "riverbank"}},
      {"vegetation", "soil loss", {"slope", "field"}},
      {"caffeine", "heart rate", {"person", "runner"}},
      {"density", "buoyancy", {"object", "block"}},
      {"price", "demand", {"product", "ticket"}},
      {"interest rate", "borrowing", {"bank", "country"}},
      {"sugar intake", "tooth decay", {"child", "person"}},
      {"greenhouse gases", "ice melt", {"planet", "region"}},
      {"wind speed", "wave height", {"ocean", "lake"}},
      {"viscosity", "flow rate", {"liquid", "oil"}},
      {"muscle mass", "metabolism", {"athlete", "animal"}},
      {"oxygen supply", "fire intensity", {"room", "furnace"}},
      {"gas temperature", "gas volume", {"balloon", "tire"}},
      {"brightness", "visibility", {"lamp", "star"}},
      {"tension", "vibration speed", {"string", "cable"}},
      {"ocean temperature", "storm strength", {"ocean", "sea"}},
      {"food intake", "body weight", {"dog", "cat"}},
      {"light intensity", "photosynthesis", {"leaf", "plant"}},
      {"engine power", "top speed", {"car", "boat"}},
      {"elevation", "snowfall", {"mountain", "valley"}},
  };
  return Lexicon{pairs};
}

Lexicon Lexicon::from_json(const json& j) {
  const json& arr = j.is_object() ? j.at("pairs") : j;
  if (!arr.is_array()) throw InvalidInput("lexicon must be an array of pairs");
  Lexicon lex;
  for (const auto& p : arr) {
    PropertyPair pair{p.at("cause").get<std::string>(), p.at("effect").get<std::string>(),
                      p.at("entities").get<std::vector<std::string>>()};
    if (pair.cause.empty() || pair.effect.empty() || pair.entities.empty())
      throw InvalidInput("lexicon pair needs a cause, an effect and at least one entity");
    lex.pairs.push_back(std::move(pair));
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open lexicon " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw RuntimeFailure("bad lexicon " + path.string() + ": " + e.what());
  }
}

json Lexicon::to_json() const {
  json arr = json::array();
  for (const auto& p : pairs) arr.push_back({{"cause", p.cause}, {"effect", p.effect}, {"entities", p.entities}});
  return json{{"pairs", arr}};
}

void GeneratorConfig::validate() const {
  if (train == 0 || dev == 0 || test == 0) throw InvalidInput("split sizes must be positive");
  if (!(prediction_weight >= 0) || !(comparison_weight >= 0) || prediction_weight + comparison_weight <= 0)
    throw InvalidInput("prediction/comparison weights must be non-negative and not both zero");
  if (!(filler_probability >= 0 && filler_probability <= 1)) throw InvalidInput("filler_probability must be in [0, 1]");
  if (!(cause_increase_probability >= 0 && cause_increase_probability <= 1))
    throw InvalidInput("cause_increase_probability must be in [0, 1]");
  if (!(distractor_probability >= 0 && distractor_probability <= 1))
    throw InvalidInput("distractor_probability must be in [0, 1]");
  if (dev_pairs == 0 || test_pairs == 0) throw InvalidInput("dev_pairs and test_pairs must be positive");
  for (int t : knowledge_templates)
    if (t < 0 || static_cast<std::size_t>(t) >= knowledge_template_count())
      throw InvalidInput("knowledge template index out of range: " + std::to_string(t));
}

GeneratorConfig generator_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("generator config must be an object");
  GeneratorConfig c;
  try {
    c.train = j.value("train", c.train);
    c.dev = j.value("dev", c.dev);
    c.test = j.value("test", c.test);
    c.prediction_weight = j.value("prediction_weight", c.prediction_weight);
    c.comparison_weight = j.value("comparison_weight", c.comparison_weight);
    c.seed = j.value("seed", c.seed);
    c.dev_pairs = j.value("dev_pairs", c.dev_pairs);
    c.test_pairs = j.value("test_pairs", c.test_pairs);
    c.filler_probability = j.value("filler_probability", c.filler_probability);
    c.cause_increase_probability = j.value("cause_increase_probability", c.cause_increase_probability);
    c.distractor_probability = j.value("distractor_probability", c.distractor_probability);
    c.knowledge_templates = j.value("knowledge_templates", c.knowledge_templates);
    if (j.contains("lexicon") && j["lexicon"].is_string()) c.lexicon_path = j["lexicon"].get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad generator config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const GeneratorConfig& c) {
  json j{{"train", c.train},
         {"dev", c.dev},
         {"test", c.test},
         {"prediction_weight", c.prediction_weight},
         {"comparison_weight", c.comparison_weight},
         {"seed", c.seed},
         {"dev_pairs", c.dev_pairs},
         {"test_pairs", c.test_pairs},
         {"filler_probability", c.filler_probability},
         {"cause_increase_probability", c.cause_increase_probability},
         {"distractor_probability", c.distractor_probability},
         {"knowledge_templates", c.knowledge_templates}};
  if (c.lexicon_path) j["lexicon"] = c.lexicon_path->string();
  return j;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput("bad generator config " + path.string() + ": " + e.what());
  }
  auto c = generator_config_from_json(j);
  if (c.lexicon_path && c.lexicon_path->is_relative()) c.lexicon_path = path.parent_path() / *c.lexicon_path;
  return c;
}

SyntheticCorpus generate_synthetic_corpus(const GeneratorConfig& config) {
  return generate_synthetic_corpus(config, config.lexicon_path ? Lexicon::load(*config.lexicon_path)
                                                               : Lexicon::builtin());
}

SyntheticCorpus generate_synthetic_corpus(const GeneratorConfig& config, const Lexicon& lexicon) {
  config.validate();
  if (lexicon.pairs.size() < config.dev_pairs + config.test_pairs + 1)
    throw InvalidInput("lexicon has " + std::to_string(lexicon.pairs.size()) + " pairs; disjoint splits need at least " +
                       std::to_string(config.dev_pairs + config.test_pairs + 1));
  std::vector<int> allowed = config.knowledge_templates;
  if (allowed.empty())
    for (std::size_t i = 0; i < knowledge_template_count(); ++i) allowed.push_back(static_cast<int>(i));

  Rng rng(config.seed);
  std::vector<PropertyPair> pairs = lexicon.pairs;
  shuffle(pairs, rng);
  SyntheticCorpus c;
  const auto dev_end = static_cast<std::ptrdiff_t>(config.dev_pairs);
  const auto test_end = dev_end + static_cast<std::ptrdiff_t>(config.test_pairs);
  c.dev_pairs.assign(pairs.begin(), pairs.begin() + dev_end);
  c.test_pairs.assign(pairs.begin() + dev_end, pairs.begin() + test_end);
  c.train_pairs.assign(pairs.begin() + test_end, pairs.end());

  const std::uint64_t base = config.seed * 0x9E3779B97F4A7C15ULL;
  c.train = generate_split("train", config.train, c.train_pairs, config, allowed, base + 1);
  c.dev = generate_split("dev", config.dev, c.dev_pairs, config, allowed, base + 2);
  c.test = generate_split("test", config.test, c.test_pairs, config, allowed, base + 3);
  return c;
}

}  // namespace qreason::data
