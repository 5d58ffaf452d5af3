#include "qreason/cli/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qreason/datakit/generator.hpp"
#include "qreason/error.hpp"
#include "qreason/evalkit/metrics.hpp"
#include "qreason/evalkit/trace.hpp"
#include "qreason/trainer/gradient_audit.hpp"
#include "qreason/trainer/trainer.hpp"

namespace qreason::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw RuntimeFailure(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create " + dir.string() + ": " + ec.message());
}

// Accepts "d/dev" for d/dev.jsonl.
fs::path resolve_split(const std::string& name) {
  if (fs::is_regular_file(name)) return name;
  if (fs::is_regular_file(name + ".jsonl")) return name + ".jsonl";
  throw RuntimeFailure("no dataset at " + name);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  json inputs = json::object();
  json outputs = json::object();
  json stages = json::object();
  std::string started = utc_now();
  Clock::time_point t0 = Clock::now();

  void stage(const std::string& name, Clock::time_point since) { stages[name] = seconds_since(since); }

  void write(const fs::path& dir) {
    outputs["manifest"] = (dir / "manifest.json").string();
    json j{{"command", command},
           {"argv", argv},
           {"config", config},
           {"seed", seed ? json(*seed) : json(nullptr)},
           {"inputs", inputs},
           {"outputs", outputs},
           {"version", QREASON_VERSION},
           {"timings", {{"started", started}, {"wall_seconds", seconds_since(t0)}, {"stages", stages}}}};
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }
};

struct EncoderFlags {
  std::optional<int> hidden, layers, heads, feed_forward;

  void add(CLI::App* app) {
    app->add_option("--hidden", hidden, "Encoder width");
    app->add_option("--layers", layers, "Transformer blocks");
    app->add_option("--heads", heads, "Attention heads");
    app->add_option("--ff", feed_forward, "Feed-forward width");
  }
  void apply(text::EncoderConfig& c) const {
    if (hidden) c.hidden = *hidden;
    if (layers) c.layers = *layers;
    if (heads) c.heads = *heads;
    if (feed_forward) c.feed_forward = *feed_forward;
  }
};

struct TrainFlags {
  std::optional<int> epochs, batch, accumulation, patience;
  std::optional<double> lr, threshold, word_dropout;
  std::optional<std::string> ablate;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs);
    app->add_option("--batch", batch);
    app->add_option("--accumulation", accumulation, "Batches per optimizer step");
    app->add_option("--patience", patience, "Early stopping patience, 0 disables");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--threshold", threshold, "Span threshold tau");
    app->add_option("--word-dropout", word_dropout);
    app->add_option("--ablate", ablate, "HEAD[,HEAD...] whose loss is switched off");
  }
  void apply(train::TrainConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch) c.batch_size = *batch;
    if (accumulation) c.accumulation = *accumulation;
    if (patience) c.patience = *patience;
    if (lr) c.learning_rate = *lr;
    if (threshold) c.threshold = *threshold;
    if (word_dropout) c.word_dropout = *word_dropout;
    if (ablate) {
      try {
        c.enabled &= ~train::parse_ablation(*ablate);
      } catch (const InvalidInput& e) {
        throw UsageError(e.what());
      }
    }
  }
};

struct DataFlags {
  std::string data, train, dev;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Directory holding train.jsonl and dev.jsonl");
    app->add_option("--train", train, "Training split");
    app->add_option("--dev", dev, "Development split");
  }
  std::pair<fs::path, fs::path> resolve() const {
    std::string t = train, d = dev;
    if (!data.empty()) {
      if (t.empty()) t = (fs::path(data) / "train").string();
      if (d.empty()) d = (fs::path(data) / "dev").string();
    }
    if (t.empty() || d.empty()) throw UsageError("give --data or both --train and --dev");
    return {resolve_split(t), resolve_split(d)};
  }
};

data::Dataset load_split(const fs::path& path, std::ostream& err) {
  auto ds = data::load_dataset(path);
  if (ds.alignment_warnings > 0)
    err << path.string() << ": " << ds.alignment_warnings << " annotation(s) not found in their source\n";
  return ds;
}

void print_epoch(std::ostream& out, const train::EpochRecord& e) {
  out << "epoch " << e.epoch << " loss " << std::fixed << std::setprecision(4) << e.train_loss << " dev "
      << e.dev_metric << (e.best ? " *" : "") << std::defaultfloat << std::setprecision(6) << '\n'
      << std::flush;
}

// ---- gen-data

struct GenData {
  std::string out_dir, config_path, lexicon_path;
  std::optional<std::size_t> n_train, n_dev, n_test;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--out", out_dir, "Output directory")->required();
    app->add_option("--n-train", n_train);
    app->add_option("--n-dev", n_dev);
    app->add_option("--n-test", n_test);
    app->add_option("--seed", seed);
    app->add_option("--config", config_path, "Generator config JSON");
    app->add_option("--lexicon", lexicon_path, "Property-pair lexicon JSON");
  }

  void run(Manifest& m, std::ostream& out) {
    data::GeneratorConfig g;
    if (!config_path.empty()) {
      g = data::load_generator_config(config_path);
      m.inputs["config"] = config_path;
    }
    if (n_train) g.train = *n_train;
    if (n_dev) g.dev = *n_dev;
    if (n_test) g.test = *n_test;
    if (seed) g.seed = *seed;
    if (!lexicon_path.empty()) g.lexicon_path = lexicon_path;
    try {
      g.validate();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
    if (g.lexicon_path) m.inputs["lexicon"] = g.lexicon_path->string();
    m.config = data::to_json(g);
    m.seed = g.seed;

    const auto t = Clock::now();
    const auto corpus = data::generate_synthetic_corpus(g);
    m.stage("generate", t);
    const fs::path dir(out_dir);
    make_dir(dir);
    for (auto [name, split] : {std::pair{"train", &corpus.train}, std::pair{"dev", &corpus.dev},
                               std::pair{"test", &corpus.test}}) {
      const auto path = dir / (std::string(name) + ".jsonl");
      data::save_dataset(path, split->examples);
      m.outputs[name] = path.string();
      out << name << " " << split->size() << " -> " << path.string() << '\n';
    }
    m.write(dir);
  }
};

// ---- train-reason

struct TrainReason {
  DataFlags data_flags;
  EncoderFlags encoder;
  TrainFlags train_flags;
  std::string out_dir, config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max, m_max;

  void add(CLI::App* app) {
    data_flags.add(app);
    encoder.add(app);
    train_flags.add(app);
    app->add_option("--out", out_dir, "Model directory")->required();
    app->add_option("--config", config_path, "JSON with \"model\" and \"train\" sections");
    app->add_option("--seed", seed, "Seeds both initialisation and batching");
    app->add_option("--n-max", n_max, "Knowledge positions");
    app->add_option("--m-max", m_max, "Statement positions");
  }

  void run(Manifest& m, std::ostream& out, std::ostream& err) {
    heads::ModelConfig mc;
    train::TrainConfig tc;
    if (!config_path.empty()) {
      const json file = read_json_file(config_path);
      if (file.contains("model")) {
        json base = json::parse(heads::config_to_json(mc));
        base.merge_patch(file["model"]);
        mc = heads::config_from_json(base.dump());
      }
      if (file.contains("train")) tc = train::train_config_from_json(file["train"], tc);
      m.inputs["config"] = config_path;
    }
    encoder.apply(mc.encoder);
    if (n_max) mc.n_max = *n_max;
    if (m_max) mc.m_max = *m_max;
    mc.encoder.max_positions = std::max(mc.encoder.max_positions, text::assembled_length(mc.n_max, mc.m_max));
    train_flags.apply(tc);
    if (seed) mc.seed = tc.seed = *seed;
    try {
      tc.validate();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
    m.seed = tc.seed;
    m.config = {{"model", json::parse(heads::config_to_json(mc))}, {"train", train::to_json(tc)}};

    const auto [train_path, dev_path] = data_flags.resolve();
    m.inputs["train"] = train_path.string();
    m.inputs["dev"] = dev_path.string();
    const auto train_set = load_split(train_path, err);
    const auto dev_set = load_split(dev_path, err);

    auto t = Clock::now();
    heads::ReasoningModel<float> model(mc, train::build_reasoning_vocab(train_set.examples));
    const auto result = train::train_reasoning(model, train_set.examples, dev_set.examples, tc,
                                               [&](const train::EpochRecord& e) { print_epoch(out, e); });
    m.stage("train", t);

    const fs::path dir(out_dir);
    make_dir(dir);
    model.save(dir);
    write_text(dir / "metrics.jsonl", result.log_jsonl());
    write_text(dir / "config.json", m.config.dump(2) + "\n");
    m.outputs["model"] = dir.string();
    m.outputs["metrics"] = (dir / "metrics.jsonl").string();
    m.outputs["config"] = (dir / "config.json").string();
    out << "best epoch " << result.best_epoch << " dev " << result.best_metric << '\n';
    m.write(dir);
  }
};

// ---- train-answer

struct TrainAnswer {
  DataFlags data_flags;
  EncoderFlags encoder;
  TrainFlags train_flags;
  std::string out_dir, config_path, context = "gold", reason_dir;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    data_flags.add(app);
    encoder.add(app);
    train_flags.add(app);
    app->add_option("--out", out_dir, "Model directory")->required();
    app->add_option("--config", config_path, "JSON with \"answer\" and \"train\" sections");
    app->add_option("--seed", seed, "Seeds both initialisation and batching");
    app->add_option("--context", context, "Text standing in for the knowledge")
        ->check(CLI::IsMember({"gold", "model", "knowledge"}));
    app->add_option("--reason", reason_dir, "Reasoning model, for --context model");
  }

  void run(Manifest& m, std::ostream& out, std::ostream& err) {
    answer::AnswerConfig ac;
    train::TrainConfig tc;
    if (!config_path.empty()) {
      const json file = read_json_file(config_path);
      if (file.contains("answer")) {
        json base = json::parse(answer::config_to_json(ac));
        base.merge_patch(file["answer"]);
        ac = answer::config_from_json(base.dump());
      }
      if (file.contains("train")) tc = train::train_config_from_json(file["train"], tc);
      m.inputs["config"] = config_path;
    }
    encoder.apply(ac.encoder);
    ac.encoder.max_positions = std::max(ac.encoder.max_positions, text::assembled_length(ac.text_max, ac.qa_max));
    train_flags.apply(tc);
    if (seed) ac.seed = tc.seed = *seed;
    try {
      tc.validate();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }

    train::AnswerTrainOptions opts;
    if (context == "model") opts.context = train::AnswerContext::ModelTraces;
    else if (context == "knowledge") opts.context = train::AnswerContext::Knowledge;
    opts.threshold = tc.threshold;
    std::unique_ptr<heads::ReasoningModel<float>> reason_model;
    std::unique_ptr<deduction::ModelReasoner<float>> reasoner;
    if (opts.context == train::AnswerContext::ModelTraces) {
      if (reason_dir.empty()) throw UsageError("--context model needs --reason");
      reason_model = heads::ReasoningModel<float>::load(reason_dir);
      reasoner = std::make_unique<deduction::ModelReasoner<float>>(*reason_model);
      opts.reasoner = reasoner.get();
      m.inputs["reason"] = reason_dir;
    }
    m.seed = tc.seed;
    m.config = {{"answer", json::parse(answer::config_to_json(ac))},
                {"train", train::to_json(tc)},
                {"context", std::string(train::to_string(opts.context))}};

    const auto [train_path, dev_path] = data_flags.resolve();
    m.inputs["train"] = train_path.string();
    m.inputs["dev"] = dev_path.string();
    const auto train_set = load_split(train_path, err);
    const auto dev_set = load_split(dev_path, err);

    auto t = Clock::now();
    answer::AnswerModel<float> model(ac, train::build_answer_vocab(train_set.examples));
    const auto result = train::train_answerer(model, train_set.examples, dev_set.examples, tc, opts,
                                              [&](const train::EpochRecord& e) { print_epoch(out, e); });
    m.stage("train", t);

    const fs::path dir(out_dir);
    make_dir(dir);
    model.save(dir);
    write_text(dir / "metrics.jsonl", result.log_jsonl());
    write_text(dir / "config.json", m.config.dump(2) + "\n");
    m.outputs["model"] = dir.string();
    m.outputs["metrics"] = (dir / "metrics.jsonl").string();
    m.outputs["config"] = (dir / "config.json").string();
    out << "best epoch " << result.best_epoch << " dev " << result.best_metric << '\n';
    m.write(dir);
  }
};

// ---- eval

struct Eval {
  std::string reason_dir, answer_dir, split, out_dir;
  double threshold = deduction::kDefaultThreshold;
  std::uint64_t seed = 17;

  void add(CLI::App* app) {
    app->add_option("--reason", reason_dir, "Reasoning model directory")->required();
    app->add_option("--answer", answer_dir, "Answer model directory")->required();
    app->add_option("--data", split, "Dataset split")->required();
    app->add_option("--threshold", threshold, "Span threshold tau");
    app->add_option("--seed", seed, "Seed of the random baseline");
    app->add_option("--out", out_dir, "Directory for report.json and the manifest");
  }

  void run(Manifest& m, std::ostream& out, std::ostream& err) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("--threshold must lie in (0, 1)");
    const auto path = resolve_split(split);
    m.inputs = {{"reason", reason_dir}, {"answer", answer_dir}, {"data", path.string()}};
    m.config = {{"threshold", threshold}};
    m.seed = seed;
    const auto ds = load_split(path, err);
    const auto reason_model = heads::ReasoningModel<float>::load(reason_dir);
    const auto answer_model = answer::AnswerModel<float>::load(answer_dir);
    const deduction::ModelReasoner<float> reasoner(*reason_model);
    const answer::ModelScorer<float> scorer(*answer_model);

    auto t = Clock::now();
    const auto outputs = eval::collect_outputs(reasoner, ds.examples);
    const auto report = eval::module_eval(ds.examples, outputs, threshold);
    m.stage("modules", t);
    t = Clock::now();
    const auto qa = eval::qa_accuracy(reasoner, scorer, ds.examples, threshold);
    m.stage("qa", t);

    out << report.table();
    out << "qa_accuracy " << std::fixed << std::setprecision(4) << qa.accuracy() << std::defaultfloat << " ("
        << qa.correct << "/" << qa.outcomes.size() << ")\n";
    if (qa.failures > 0) err << qa.failures << " instance(s) failed and were counted wrong\n";

    if (!out_dir.empty()) {
      const auto random = eval::random_baseline(ds.examples, seed);
      json failures = json::array();
      for (const auto& o : qa.outcomes)
        if (o.failed) failures.push_back({{"id", o.id}, {"error", o.error}});
      json j{{"modules", report.to_json()},
             {"qa", {{"accuracy", qa.accuracy()},
                     {"correct", qa.correct},
                     {"total", qa.outcomes.size()},
                     {"ties", qa.ties},
                     {"failures", failures}}},
             {"random_baseline", random.accuracy()}};
      const fs::path dir(out_dir);
      make_dir(dir);
      write_text(dir / "report.json", j.dump(2) + "\n");
      m.outputs["report"] = (dir / "report.json").string();
      m.write(dir);
    }
  }
};

// ---- trace and infer share the pipeline

struct Pipeline {
  std::unique_ptr<heads::ReasoningModel<float>> reason_model;
  std::unique_ptr<deduction::Reasoner> reasoner;
  std::unique_ptr<answer::AnswerModel<float>> answer_model;
  std::unique_ptr<answer::ModelScorer<float>> scorer;

  Pipeline(const std::string& reason_dir, const std::string& answer_dir) {
    if (reason_dir.empty()) {
      reasoner = std::make_unique<deduction::OracleReasoner>();
    } else {
      reason_model = heads::ReasoningModel<float>::load(reason_dir);
      reasoner = std::make_unique<deduction::ModelReasoner<float>>(*reason_model);
    }
    answer_model = answer::AnswerModel<float>::load(answer_dir);
    scorer = std::make_unique<answer::ModelScorer<float>>(*answer_model);
  }

  eval::TraceRecord trace(const data::Example& ex, double threshold, std::optional<Chain> forced) const {
    const auto t = deduction::run_chain(ex, *reasoner, threshold, forced);
    return eval::emit_trace(ex, t, answer::predict_answer(ex, t, *scorer));
  }
};

std::optional<Chain> parse_forced(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto c = parse_chain(s);
  if (!c) throw UsageError("--force-chain must be prediction or comparison");
  return c;
}

void emit(std::ostream& out, const eval::TraceRecord& r, const std::string& format) {
  if (format == "json") out << eval::serialize_trace(r) << '\n';
  else out << eval::format_trace(r) << '\n';
}

struct Trace {
  std::string reason_dir, answer_dir, split, out_dir, force, format = "text";
  std::vector<std::string> ids;
  double threshold = deduction::kDefaultThreshold;

  void add(CLI::App* app) {
    app->add_option("--data", split, "Dataset split")->required();
    app->add_option("--answer", answer_dir, "Answer model directory")->required();
    app->add_option("--reason", reason_dir, "Reasoning model directory; gold labels when omitted");
    app->add_option("--id", ids, "Instance id (repeatable); the whole split when omitted");
    app->add_option("--threshold", threshold, "Span threshold tau");
    app->add_option("--force-chain", force, "prediction or comparison");
    app->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
    app->add_option("--out", out_dir, "Directory for traces.jsonl and the manifest");
  }

  void run(Manifest& m, std::ostream& out, std::ostream& err) {
    const auto forced = parse_forced(force);
    const auto path = resolve_split(split);
    m.inputs = {{"data", path.string()}, {"answer", answer_dir}, {"reason", reason_dir.empty() ? json() : json(reason_dir)}};
    m.config = {{"threshold", threshold}, {"ids", ids}, {"force_chain", force}, {"format", format}};
    const auto ds = load_split(path, err);
    const Pipeline p(reason_dir, answer_dir);

    std::vector<const data::Example*> chosen;
    if (ids.empty()) {
      for (const auto& ex : ds.examples) chosen.push_back(&ex);
    } else {
      for (const auto& id : ids) {
        auto it = std::find_if(ds.examples.begin(), ds.examples.end(),
                               [&](const data::Example& ex) { return ex.instance.id == id; });
        if (it == ds.examples.end()) throw RuntimeFailure("no instance with id " + id + " in " + path.string());
        chosen.push_back(&*it);
      }
    }

    auto t = Clock::now();
    std::string lines;
    for (const auto* ex : chosen) {
      const auto r = p.trace(*ex, threshold, forced);
      emit(out, r, format);
      lines += eval::serialize_trace(r) + "\n";
    }
    m.stage("trace", t);
    if (!out_dir.empty()) {
      const fs::path dir(out_dir);
      make_dir(dir);
      write_text(dir / "traces.jsonl", lines);
      m.outputs["traces"] = (dir / "traces.jsonl").string();
      m.write(dir);
    }
  }
};

struct Infer {
  std::string reason_dir, answer_dir, knowledge, question, file, out_dir, force, format = "text";
  std::vector<std::string> options;
  double threshold = deduction::kDefaultThreshold;

  void add(CLI::App* app) {
    app->add_option("--answer", answer_dir, "Answer model directory")->required();
    app->add_option("--reason", reason_dir, "Reasoning model directory")->required();
    app->add_option("--knowledge", knowledge);
    app->add_option("--question", question);
    app->add_option("--options", options, "The two answer options")->expected(2);
    app->add_option("--file", file, "One dataset record as JSON");
    app->add_option("--threshold", threshold, "Span threshold tau");
    app->add_option("--force-chain", force, "prediction or comparison");
    app->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
    app->add_option("--out", out_dir, "Directory for trace.json and the manifest");
  }

  void run(Manifest& m, std::ostream& out) {
    const auto forced = parse_forced(force);
    data::Example ex;
    if (!file.empty()) {
      if (!knowledge.empty() || !question.empty() || !options.empty())
        throw UsageError("--file excludes --knowledge, --question and --options");
      ex = data::parse_record(read_json_file(file), 1);
      m.inputs["file"] = file;
    } else {
      if (knowledge.empty() || question.empty() || options.size() != 2)
        throw UsageError("give --knowledge, --question and two --options, or --file");
      data::Instance inst;
      inst.id = "input";
      inst.knowledge = knowledge;
      inst.question = question;
      inst.options = {options[0], options[1]};
      ex = data::prepare(std::move(inst));
      m.config["instance"] = {{"knowledge", knowledge}, {"question", question}, {"options", options}};
    }
    m.inputs["reason"] = reason_dir;
    m.inputs["answer"] = answer_dir;
    m.config["threshold"] = threshold;
    m.config["force_chain"] = force;
    const Pipeline p(reason_dir, answer_dir);
    const auto t = Clock::now();
    const auto r = p.trace(ex, threshold, forced);
    m.stage("infer", t);
    emit(out, r, format);
    if (!out_dir.empty()) {
      const fs::path dir(out_dir);
      make_dir(dir);
      write_text(dir / "trace.json", eval::serialize_trace(r) + "\n");
      m.outputs["trace"] = (dir / "trace.json").string();
      m.write(dir);
    }
  }
};

// ---- gradcheck

struct Gradcheck {
  train::GradientAuditConfig config;
  double tolerance = 1e-3, heads_tolerance = 1e-6;
  std::string out_dir;

  void add(CLI::App* app) {
    app->add_option("--n", config.n, "Knowledge positions");
    app->add_option("--m", config.m, "Statement positions");
    app->add_option("--hidden", config.hidden);
    app->add_option("--layers", config.layers);
    app->add_option("--heads", config.heads);
    app->add_option("--seed", config.seed);
    app->add_option("--step", config.step, "Finite-difference step");
    app->add_option("--tolerance", tolerance, "Bound for the whole model");
    app->add_option("--heads-tolerance", heads_tolerance, "Bound for the scoring heads alone");
    app->add_option("--out", out_dir, "Directory for the manifest");
  }

  bool run(Manifest& m, std::ostream& out) {
    m.seed = config.seed;
    m.config = {{"n", config.n},         {"m", config.m},         {"hidden", config.hidden},
                {"layers", config.layers}, {"heads", config.heads}, {"step", config.step},
                {"tolerance", tolerance}, {"heads_tolerance", heads_tolerance}};
    const auto t = Clock::now();
    const auto audit = train::audit_model_gradients(config);
    m.stage("gradcheck", t);
    const bool ok_full = audit.full.max_rel_error < tolerance;
    const bool ok_heads = audit.heads.max_rel_error < heads_tolerance;
    out << "parameters " << audit.parameters << " (" << audit.full.checked << " entries checked)\n";
    out << "full   max_rel_error " << std::scientific << std::setprecision(3) << audit.full.max_rel_error
        << " at " << audit.full.worst_name << " " << (ok_full ? "ok" : "FAIL") << '\n';
    out << "heads  max_rel_error " << audit.heads.max_rel_error << " at " << audit.heads.worst_name << " "
        << (ok_heads ? "ok" : "FAIL") << std::defaultfloat << '\n';
    if (!out_dir.empty()) {
      const fs::path dir(out_dir);
      make_dir(dir);
      m.outputs["result"] = {{"full", audit.full.max_rel_error}, {"heads", audit.heads.max_rel_error}};
      m.write(dir);
    }
    return ok_full && ok_heads;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Neural reasoning modules for qualitative relationship questions", "qreason");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(QREASON_VERSION));

  GenData gen;
  TrainReason train_reason;
  TrainAnswer train_answer;
  Eval evaluate;
  Trace trace;
  Infer infer;
  Gradcheck gradcheck;
  auto* c_gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  auto* c_tr = app.add_subcommand("train-reason", "Train the reasoning modules");
  auto* c_ta = app.add_subcommand("train-answer", "Train the answer predictor");
  auto* c_eval = app.add_subcommand("eval", "Module scores and question-answering accuracy");
  auto* c_trace = app.add_subcommand("trace", "Intermediate outputs for instances of a split");
  auto* c_infer = app.add_subcommand("infer", "Answer one question");
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of the model gradients");
  gen.add(c_gen);
  train_reason.add(c_tr);
  train_answer.add(c_ta);
  evaluate.add(c_eval);
  trace.add(c_trace);
  infer.add(c_infer);
  gradcheck.add(c_grad);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << QREASON_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  Manifest m;
  for (int i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);
  const auto* sub = app.get_subcommands().front();
  m.command = sub->get_name();
  try {
    if (sub == c_gen) gen.run(m, out);
    else if (sub == c_tr) train_reason.run(m, out, err);
    else if (sub == c_ta) train_answer.run(m, out, err);
    else if (sub == c_eval) evaluate.run(m, out, err);
    else if (sub == c_trace) trace.run(m, out, err);
    else if (sub == c_infer) infer.run(m, out);
    else if (sub == c_grad && !gradcheck.run(m, out)) {
      err << "gradient check failed\n";
      return kExitFailure;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace qreason::cli
