#include "qreason/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "qreason/error.hpp"

namespace qreason::eval {

using nlohmann::json;

double token_f1(std::size_t pred_start, std::size_t pred_end, std::size_t gold_start, std::size_t gold_end) {
  if (pred_end < pred_start || gold_end < gold_start) throw InvalidInput("token_f1: malformed span");
  const std::size_t lo = std::max(pred_start, gold_start);
  const std::size_t hi = std::min(pred_end, gold_end);
  if (hi < lo) return 0.0;
  const double overlap = static_cast<double>(hi - lo + 1);
  const double p = overlap / static_cast<double>(pred_end - pred_start + 1);
  const double r = overlap / static_cast<double>(gold_end - gold_start + 1);
  return 2 * p * r / (p + r);
}

double token_f1(const deduction::Span& pred, const deduction::Span& gold) {
  if (pred.segment != gold.segment) throw InvalidInput("token_f1: spans come from different segments");
  return token_f1(pred.start, pred.end, gold.start, gold.end);
}

int fuzzy_f1(double f1) {
  if (!(f1 >= 0.0 && f1 <= 1.0)) throw InvalidInput("fuzzy_f1: value outside [0, 1]");
  return f1 > 0.0 ? 1 : 0;
}

double ModuleReport::average() const {
  double total = 0;
  int n = 0;
  for (Head h : kAllHeads) {
    const auto& s = heads[index(h)];
    if (!s.present()) continue;
    total += is_span_head(h) ? s.f1 : s.accuracy;
    ++n;
  }
  return n ? total / n : 0.0;
}

std::string ModuleReport::table() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-11s %6s %8s %8s %8s\n", "module", "n", "F1", "fuzzyF1", "acc");
  os << line;
  for (Head h : kAllHeads) {
    const auto& s = heads[index(h)];
    const std::string name(head_name(h));
    if (!s.present()) {
      std::snprintf(line, sizeof line, "%-11s %6s %8s %8s %8s\n", name.c_str(), "0", "absent", "absent", "absent");
    } else if (is_span_head(h)) {
      std::snprintf(line, sizeof line, "%-11s %6zu %8.4f %8.4f %8s\n", name.c_str(), s.count, s.f1, s.fuzzy_f1, "-");
    } else {
      std::snprintf(line, sizeof line, "%-11s %6zu %8s %8s %8.4f\n", name.c_str(), s.count, "-", "-", s.accuracy);
    }
    os << line;
  }
  std::snprintf(line, sizeof line, "threshold %.2f, instances %zu, average %.4f\n", threshold, instances, average());
  os << line;
  os << "reference (large pretrained encoder): cause F1 72.6, fuzzy F1 82.3; not a target at this scale\n";
  return os.str();
}

json ModuleReport::to_json() const {
  json j{{"threshold", threshold}, {"instances", instances}, {"average", average()}};
  json hs = json::object();
  for (Head h : kAllHeads) {
    const auto& s = heads[index(h)];
    const std::string name(head_name(h));
    if (!s.present()) {
      hs[name] = nullptr;
    } else if (is_span_head(h)) {
      hs[name] = {{"count", s.count}, {"f1", s.f1}, {"fuzzy_f1", s.fuzzy_f1}, {"exact", s.accuracy}};
    } else {
      hs[name] = {{"count", s.count}, {"accuracy", s.accuracy}};
    }
  }
  j["heads"] = hs;
  return j;
}

std::vector<heads::HeadOutputs> collect_outputs(const deduction::Reasoner& reasoner,
                                                std::span<const data::Example> examples) {
  std::vector<heads::HeadOutputs> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(reasoner.reason(ex));
  return out;
}

ModuleReport module_eval(std::span<const data::Example> examples, std::span<const heads::HeadOutputs> outputs,
                         double threshold) {
  if (examples.size() != outputs.size()) throw InvalidInput("module_eval: outputs do not match examples");
  ModuleReport r;
  r.threshold = threshold;
  r.instances = examples.size();
  std::array<double, kHeadCount> a{}, b{}, c{};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    for (Head h : kAllHeads) {
      if (!ex.labels.available(h)) continue;
      const std::size_t k = index(h);
      ++r.heads[k].count;
      if (is_span_head(h)) {
        const auto pred = deduction::read_span(ex, outputs[i], h, threshold);
        const auto& gold = *ex.labels.span(h);
        const double f1 = token_f1(pred.start, pred.end, static_cast<std::size_t>(gold.start),
                                   static_cast<std::size_t>(gold.end));
        a[k] += f1;
        b[k] += fuzzy_f1(f1);
        c[k] += (pred.start == static_cast<std::size_t>(gold.start) && pred.end == static_cast<std::size_t>(gold.end));
      } else {
        const auto& p = outputs[i][h];
        if (p.size() != 2) throw InvalidInput("module_eval: missing distribution for " + std::string(head_name(h)));
        c[k] += static_cast<int>(deduction::argmax2(p[0], p[1])) == *ex.labels.class_index(h);
      }
    }
  }
  for (std::size_t k = 0; k < kHeadCount; ++k) {
    auto& s = r.heads[k];
    if (!s.present()) continue;
    const double n = static_cast<double>(s.count);
    s.f1 = a[k] / n;
    s.fuzzy_f1 = b[k] / n;
    s.accuracy = c[k] / n;
  }
  return r;
}

ModuleReport module_eval(const deduction::Reasoner& reasoner, std::span<const data::Example> examples,
                         double threshold) {
  const auto outputs = collect_outputs(reasoner, examples);
  return module_eval(examples, outputs, threshold);
}

std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(0.05 * i);
  return g;
}

ThresholdChoice tune_threshold(std::span<const data::Example> examples, std::span<const heads::HeadOutputs> outputs,
                               std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("tune_threshold: empty grid");
  ThresholdChoice best;
  best.span_f1 = -1;
  for (double tau : grid) {
    const auto r = module_eval(examples, outputs, tau);
    double total = 0;
    int n = 0;
    for (Head h : kAllHeads) {
      if (is_span_head(h) && r[h].present()) {
        total += r[h].f1;
        ++n;
      }
    }
    const double f1 = n ? total / n : 0.0;
    best.grid.emplace_back(tau, f1);
    if (f1 > best.span_f1) {
      best.span_f1 = f1;
      best.threshold = tau;
    }
  }
  return best;
}

namespace {

template <class ContextFn>
QaResult run_qa(const answer::OptionScorer& scorer, std::span<const data::Example> examples, ContextFn context) {
  QaResult r;
  r.outcomes.reserve(examples.size());
  for (const auto& ex : examples) {
    QaOutcome o;
    o.id = ex.instance.id;
    try {
      const auto pred = answer::choose(scorer.score(ex, context(ex)));
      o.predicted = pred.index;
      o.tie = pred.tie;
      o.correct = ex.instance.answer && *ex.instance.answer == pred.index;
    } catch (const std::exception& e) {
      o.failed = true;
      o.error = e.what();
    }
    r.correct += o.correct;
    r.failures += o.failed;
    r.ties += o.tie;
    r.outcomes.push_back(std::move(o));
  }
  return r;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

QaResult qa_accuracy(const deduction::Reasoner& reasoner, const answer::OptionScorer& scorer,
                     std::span<const data::Example> examples, double threshold) {
  return run_qa(scorer, examples, [&](const data::Example& ex) {
    return deduction::run_chain(ex, reasoner, threshold).synthetic.text;
  });
}

QaResult knowledge_baseline(const answer::OptionScorer& scorer, std::span<const data::Example> examples) {
  return run_qa(scorer, examples, [](const data::Example& ex) { return ex.instance.knowledge; });
}

QaResult gold_text_accuracy(const answer::OptionScorer& scorer, std::span<const data::Example> examples) {
  return run_qa(scorer, examples, [](const data::Example& ex) {
    auto s = deduction::gold_synthetic(ex);
    if (!s) throw InvalidInput("no gold synthetic text for " + ex.instance.id);
    return s->text;
  });
}

std::array<double, 2> RandomScorer::score(const data::Example& example, const std::string&) const {
  std::mt19937_64 rng(seed_ ^ fnv1a(example.instance.id));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = u(rng);
  return {a, u(rng)};
}

QaResult random_baseline(std::span<const data::Example> examples, std::uint64_t seed) {
  RandomScorer scorer(seed);
  return run_qa(scorer, examples, [](const data::Example&) { return std::string(); });
}

}  // namespace qreason::eval
