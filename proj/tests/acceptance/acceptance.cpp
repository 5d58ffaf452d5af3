#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qreason/cli/cli.hpp"
#include "qreason/datakit/generator.hpp"
#include "qreason/deduction/chain.hpp"
#include "qreason/evalkit/metrics.hpp"
#include "qreason/trainer/gradient_audit.hpp"
#include "qreason/trainer/trainer.hpp"
#include "worked_examples.hpp"

using namespace qreason;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// ---- 1

void truth_tables(Outcome& o) {
  const auto t0 = Clock::now();
  int cases = 0, right = 0;
  for (int pol : {1, -1}) {
    for (int second : {1, -1}) {
      const Polarity p = pol > 0 ? Polarity::Positive : Polarity::Negative;
      const Direction want = pol * second > 0 ? Direction::More : Direction::Less;
      const ValueChange v = second > 0 ? ValueChange::Increase : ValueChange::Decrease;
      const Ordering c = second > 0 ? Ordering::World1Greater : Ordering::World1Less;
      cases += 2;
      right += deduction::deduce_prediction(p, v) == want;
      right += deduction::deduce_comparison(p, c) == want;
    }
  }
  o.require(cases == 8 && right == 8, "truth table");
  int sentences = 0;
  for (const auto& row : testing::worked_examples()) {
    const auto trace = deduction::run_chain(row.example, deduction::OracleReasoner{});
    const bool ok = trace.synthetic.text == row.deduction;
    sentences += ok;
    o.require(ok, row.example.instance.id + " gave \"" + trace.synthetic.text + "\"");
  }
  const double t = since(t0);
  o.require(t < 1.0, "time");
  o.detail << right << "/8 truth-table cases, " << sentences << "/4 worked sentences, " << fixed(t, 3) << " s";
}

// ---- 2

void gradients(Outcome& o) {
  const auto t0 = Clock::now();
  const auto audit = train::audit_model_gradients({});
  const double t = since(t0);
  o.require(audit.full.max_rel_error < 1e-3, "full model error " + std::to_string(audit.full.max_rel_error));
  o.require(audit.heads.max_rel_error < 1e-6, "scoring heads error " + std::to_string(audit.heads.max_rel_error));
  o.require(t < 120.0, "time");
  char buf[160];
  std::snprintf(buf, sizeof buf, "max rel error %.2e over %zu parameters (worst %s), scoring heads alone %.2e, %.1f s",
                audit.full.max_rel_error, audit.parameters, audit.full.worst_name.c_str(),
                audit.heads.max_rel_error, t);
  o.detail << buf;
}

// ---- 3

void drop_label(data::Labels& l, Head h) {
  if (is_span_head(h)) l.span(h).reset();
  else if (h == Head::Polarity) l.polarity.reset();
  else if (h == Head::Value) l.value.reset();
  else if (h == Head::Comparison) l.comparison.reset();
  else l.type.reset();
}

void gamma_masking(Outcome& o) {
  data::GeneratorConfig g;
  g.train = 24;
  g.dev = 4;
  g.test = 4;
  const auto corpus = data::generate_synthetic_corpus(g);
  heads::ModelConfig mc;
  mc.encoder.hidden = 16;
  mc.encoder.feed_forward = 32;
  mc.n_max = mc.m_max = 48;
  heads::ReasoningModel<double> model(mc, train::build_reasoning_vocab(corpus.train.examples));
  const auto& batch = corpus.train.examples;

  auto batch_loss = [&](const std::function<data::Labels(const data::Example&)>& labels, heads::HeadSet enabled) {
    diff::Var<double> total;
    for (const auto& ex : batch) {
      const auto vars = model.forward(model.assemble(ex.knowledge_words(), ex.statement_words()));
      auto l = train::reason_loss(vars, labels(ex), train::LossWeights{}, enabled);
      total = total.valid() ? diff::add(total, l) : l;
    }
    return total;
  };
  auto grad_sum = [&](Head h) {
    double s = 0;
    for (const auto& name : heads::ReasonHeads<double>::exclusive_parameters(h, model.kHeadPrefix))
      s += model.params().get(name).grad().cwiseAbs().sum();
    return s;
  };

  int exact_zero = 0, live = 0;
  for (Head h : kAllHeads) {
    model.params().zero_grad();
    diff::backward(batch_loss(
        [&](const data::Example& ex) {
          auto l = ex.labels;
          drop_label(l, h);
          for (Head c : heads::consumers(h)) drop_label(l, c);
          return l;
        },
        heads::all_heads()));
    const double masked = grad_sum(h);
    exact_zero += masked == 0.0;
    o.require(masked == 0.0, std::string(head_name(h)) + " masked gradient " + std::to_string(masked));

    model.params().zero_grad();
    diff::backward(batch_loss([](const data::Example& ex) { return ex.labels; }, heads::head_set({h})));
    const double on = grad_sum(h);
    live += on > 0.0;
    o.require(on > 0.0, std::string(head_name(h)) + " gradient vanished while live");
  }
  const double none = batch_loss([](const data::Example&) { return data::Labels{}; }, heads::all_heads()).item();
  o.require(none == 0.0, "all-gamma-zero loss " + std::to_string(none));
  o.detail << exact_zero << "/" << kHeadCount << " heads exactly zero when masked over a batch of " << batch.size()
           << ", " << live << "/" << kHeadCount << " live when unmasked, all-masked loss " << none;
}

// ---- 4

void metric_oracles(Outcome& o) {
  std::mt19937_64 rng(41);
  int agree = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t ps = rng() % 20, pe = ps + rng() % 8, gs = rng() % 20, ge = gs + rng() % 8;
    agree += eval::token_f1(ps, pe, gs, ge) == testing::reference_f1(ps, pe, gs, ge);
  }
  o.require(agree == 200, "token_f1 reference");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int fuzzy_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = i % 50 == 0 ? 0.0 : u(rng);
    const int f = eval::fuzzy_f1(x);
    fuzzy_ok += (f == 0 || f == 1) && f >= x;
  }
  o.require(fuzzy_ok == 1000, "fuzzy_f1 bounds");
  data::GeneratorConfig g;
  g.train = 10;
  g.dev = 400;
  g.test = 10;
  const auto corpus = data::generate_synthetic_corpus(g);
  const auto report = eval::module_eval(deduction::OracleReasoner{}, corpus.dev.examples, deduction::kDefaultThreshold);
  int perfect = 0;
  for (Head h : kAllHeads) {
    const auto& s = report[h];
    const bool ok = s.present() && s.accuracy == 1.0 && (!is_span_head(h) || (s.f1 == 1.0 && s.fuzzy_f1 == 1.0));
    perfect += ok;
    o.require(ok, std::string("oracle ") + std::string(head_name(h)));
  }
  o.detail << agree << "/200 F1 pairs exact, " << fuzzy_ok << "/1000 fuzzy checks, oracle perfect on " << perfect << "/"
           << kHeadCount << " heads";
}

// ---- 5

void annotation_rules(Outcome& o) {
  const auto ds = data::load_dataset(fs::path(QREASON_TEST_DATA) / "annotated_records.jsonl");
  o.require(ds.size() == 6, "fixture size");
  if (ds.size() != 6) return;
  const auto& same = ds.examples[0];   // MORE / MORE, both effect worlds
  const auto& opp = ds.examples[1];    // LESS / MORE
  const auto& lessless = ds.examples[2];
  o.require(same.labels.polarity == Polarity::Positive, "equal signs give positive");
  o.require(lessless.labels.polarity == Polarity::Positive, "both LESS give positive");
  o.require(opp.labels.polarity == Polarity::Negative, "opposite signs give negative");
  o.require(same.labels.type == Chain::Comparison, "more/less effect worlds give Comparison");
  o.require(opp.labels.type == Chain::Prediction, "no effect worlds give Prediction");
  o.require(!lessless.labels.type.has_value(), "absent question annotation leaves type unset");
  o.require(!ds.examples[4].labels.polarity.has_value(), "unparseable sign leaves polarity unset");
  const auto direct = data::derive_supervision({{"cause_dir_sign", "MORE"}, {"effect_dir_sign", "LESS"}},
                                               {{"more_effect_world", "a"}, {"less_effect_world", "b"}});
  o.require(direct.polarity == Polarity::Negative && direct.type == Chain::Comparison, "direct rule call");
  o.detail << "fixture of " << ds.size() << " records: same-sign positive, opposite-sign negative, both effect worlds"
           << " Comparison";
}

// ---- 6

void span_conversion(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int agree = 0, monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(1 + rng() % 24);
    double s = 0;
    for (auto& x : p) s += (x = u(rng) * u(rng));
    for (auto& x : p) x /= s;
    const double tau = 0.005 + 0.4 * u(rng);
    const auto got = deduction::attention_to_span(p, tau, Segment::Knowledge);
    const auto want = testing::brute_window(p, tau);
    agree += got.start == want.first && got.end == want.second;
    const double tau2 = tau + (0.99 - tau) * u(rng);
    const auto tight = deduction::attention_to_span(p, tau2, Segment::Knowledge);
    monotone += tight.start >= got.start && tight.end <= got.end;
  }
  const double t = since(t0);
  o.require(agree == 1000, "brute-force agreement");
  o.require(monotone == 1000, "monotone shrinkage");
  o.require(t < 10.0, "time");
  o.detail << agree << "/1000 agree with the brute-force window, " << monotone << "/1000 shrink as tau grows, "
           << fixed(t, 3) << " s";
}

// ---- 7

void learnability(Outcome& o) {
  const auto t0 = Clock::now();
  const auto corpus = data::generate_synthetic_corpus(data::GeneratorConfig{});
  o.require(corpus.train.size() == 2000 && corpus.dev.size() == 400 && corpus.test.size() == 400, "corpus sizes");

  heads::ReasoningModel<float> reasoner_model(heads::ModelConfig{},
                                              train::build_reasoning_vocab(corpus.train.examples));
  const train::TrainConfig tc;
  train::train_reasoning(reasoner_model, corpus.train.examples, corpus.dev.examples, tc);
  const double t_reason = since(t0);

  answer::AnswerModel<float> answer_model(answer::AnswerConfig{}, train::build_answer_vocab(corpus.train.examples));
  train::train_answerer(answer_model, corpus.train.examples, corpus.dev.examples, tc);
  const double t_answer = since(t0) - t_reason;

  const deduction::ModelReasoner<float> reasoner(reasoner_model);
  const answer::ModelScorer<float> scorer(answer_model);
  const auto report = eval::module_eval(reasoner, corpus.test.examples, tc.threshold);
  const auto qa = eval::qa_accuracy(reasoner, scorer, corpus.test.examples, tc.threshold);
  const auto random = eval::random_baseline(corpus.test.examples, tc.seed);
  const double total = since(t0);

  for (Head h : {Head::Cause, Head::Effect, Head::World, Head::World1, Head::World2})
    o.require(report[h].fuzzy_f1 >= 0.90, std::string(head_name(h)) + " fuzzy F1 " + fixed(report[h].fuzzy_f1));
  for (Head h : {Head::Polarity, Head::Value, Head::Type})
    o.require(report[h].accuracy >= 0.95, std::string(head_name(h)) + " accuracy " + fixed(report[h].accuracy));
  o.require(report[Head::Comparison].accuracy >= 0.90, "comparison accuracy " + fixed(report[Head::Comparison].accuracy));
  o.require(qa.accuracy() >= 0.90, "qa accuracy " + fixed(qa.accuracy()));
  o.require(std::abs(random.accuracy() - 0.5) <= 0.05, "random baseline " + fixed(random.accuracy()));
  o.require(total <= 15 * 60.0, "time");

  double min_fuzzy = 1.0;
  for (Head h : {Head::Cause, Head::Effect, Head::World, Head::World1, Head::World2})
    min_fuzzy = std::min(min_fuzzy, report[h].fuzzy_f1);
  o.detail << "span fuzzy F1 >= " << fixed(min_fuzzy, 3) << ", polarity " << fixed(report[Head::Polarity].accuracy, 3)
           << ", value " << fixed(report[Head::Value].accuracy, 3) << ", type " << fixed(report[Head::Type].accuracy, 3)
           << ", comparison " << fixed(report[Head::Comparison].accuracy, 3) << ", QA " << fixed(qa.accuracy(), 3)
           << ", random " << fixed(random.accuracy(), 3) << "; " << fixed(t_reason, 0) << "+" << fixed(t_answer, 0)
           << " s training, " << fixed(total, 0) << " s total";
}

// ---- 8

void ablation(Outcome& o) {
  const auto corpus = data::generate_synthetic_corpus(data::GeneratorConfig{});
  const auto vocab = train::build_reasoning_vocab(corpus.train.examples);
  auto polarity = [&](std::uint64_t seed, bool ablate) {
    heads::ModelConfig mc;
    mc.seed = seed;
    heads::ReasoningModel<float> model(mc, vocab);
    train::TrainConfig tc;
    tc.seed = seed;
    if (ablate) tc.enabled = ~heads::head_set({Head::Cause, Head::Effect});
    train::train_reasoning(model, corpus.train.examples, corpus.dev.examples, tc);
    return eval::module_eval(deduction::ModelReasoner<float>(model), corpus.test.examples, tc.threshold)[Head::Polarity]
        .accuracy;
  };
  int wins = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const double joint = polarity(seed, false);
    const double ablated = polarity(seed, true);
    wins += joint > ablated;
    o.require(joint > ablated, "seed " + std::to_string(seed));
    o.detail << "seed " << seed << ": joint " << fixed(joint, 3) << " vs ablated " << fixed(ablated, 3) << "; ";
  }
  o.detail << wins << "/3 seeds degrade without cause/effect supervision";
}

// ---- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qreason");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

void determinism(Outcome& o) {
  const auto root = fs::temp_directory_path() / "qreason_acceptance_determinism";
  fs::remove_all(root);
  const auto data = (root / "data").string();
  o.require(cli({"gen-data", "--out", data, "--n-train", "300", "--n-dev", "100", "--n-test", "100"}) == 0, "gen-data");
  int identical = 0, compared = 0;
  for (const char* cmd : {"train-reason", "train-answer"}) {
    for (const char* run : {"a", "b"}) {
      const auto out = (root / (std::string(cmd) + "_" + run)).string();
      o.require(cli({cmd, "--data", data, "--out", out, "--epochs", "2", "--seed", "23"}) == 0, cmd);
    }
    for (const char* file : {"metrics.jsonl", "params.qrck", "vocab.txt"}) {
      const auto a = slurp(root / (std::string(cmd) + "_a") / file);
      const auto b = slurp(root / (std::string(cmd) + "_b") / file);
      ++compared;
      const bool same = !a.empty() && a == b;
      identical += same;
      o.require(same, std::string(cmd) + " " + file);
    }
  }
  fs::remove_all(root);
  o.detail << identical << "/" << compared << " files bit-identical across two seeded runs (metric logs, checkpoints,"
           << " vocabularies)";
}

const std::vector<std::pair<const char*, void (*)(Outcome&)>>& criteria() {
  static const std::vector<std::pair<const char*, void (*)(Outcome&)>> c = {
      {"deduction truth tables and worked sentences", truth_tables},
      {"gradient validation", gradients},
      {"gamma masking", gamma_masking},
      {"metric oracles", metric_oracles},
      {"annotation rules", annotation_rules},
      {"span conversion", span_conversion},
      {"end-to-end learnability", learnability},
      {"ablation direction", ablation},
      {"determinism", determinism},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: qreason_acceptance [--only N]...\n";
      return 1;
    }
  }
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) selected.push_back(i);

  bool all = true;
  for (int n : selected) {
    if (n < 1 || n > static_cast<int>(criteria().size())) {
      std::cerr << "no criterion " << n << "\n";
      return 1;
    }
    const auto& [name, check] = criteria()[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail.str()
              << std::endl;
  }
  return all ? 0 : 1;
}
