#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qreason/cli/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "qreason");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = qreason::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "qreason_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

const std::vector<std::string> kTiny = {"--hidden", "8", "--ff", "16", "--layers", "1", "--heads", "2", "--epochs", "1"};

// Generated once: a small corpus plus one reasoning and one answer model.
const fs::path& trained() {
  static const fs::path dir = [] {
    const auto d = scratch() / "run";
    REQUIRE(call({"gen-data", "--out", (d / "data").string(), "--n-train", "40", "--n-dev", "16", "--n-test", "16",
                  "--seed", "7"})
                .code == 0);
    auto args = std::vector<std::string>{"train-reason", "--data", (d / "data").string(), "--out", (d / "r").string()};
    args.insert(args.end(), kTiny.begin(), kTiny.end());
    REQUIRE(call(args).code == 0);
    args = {"train-answer", "--data", (d / "data").string(), "--out", (d / "a").string()};
    args.insert(args.end(), kTiny.begin(), kTiny.end());
    REQUIRE(call(args).code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("cli usage errors exit 1 with usage on the diagnostic stream") {
  auto r = call({"eval", "--no-such-flag"});
  CHECK(r.code == 1);
  CHECK(r.out.empty());
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(call({}).code == 1);
  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"train-reason", "--data", "x", "--out", "y", "--ablate", "nope"}).code == 1);
}

TEST_CASE("cli runtime failures exit 2") {
  const auto r = call({"eval", "--reason", "missing", "--answer", "missing", "--data", "missing"});
  CHECK(r.code == 2);
  CHECK(r.err.find("missing") != std::string::npos);
}

TEST_CASE("gen-data is reproducible and writes a manifest") {
  const auto a = scratch() / "gen_a", b = scratch() / "gen_b";
  for (const auto& d : {a, b})
    REQUIRE(call({"gen-data", "--out", d.string(), "--n-train", "30", "--n-dev", "10", "--n-test", "10", "--seed", "7"})
                .code == 0);
  for (const char* s : {"train.jsonl", "dev.jsonl", "test.jsonl"}) {
    CAPTURE(s);
    CHECK(slurp(a / s) == slurp(b / s));
    CHECK_FALSE(slurp(a / s).empty());
  }
  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m["command"] == "gen-data");
  CHECK(m["seed"] == 7);
  CHECK(m["config"]["train"] == 30);
  CHECK(m["outputs"].contains("train"));
  CHECK(m["version"] == QREASON_VERSION);
  CHECK(m["timings"]["wall_seconds"].get<double>() >= 0.0);
}

TEST_CASE("training writes model, metric log and manifest") {
  const auto& d = trained();
  for (const char* f : {"params.qrck", "vocab.txt", "model.json", "metrics.jsonl", "config.json", "manifest.json"})
    CHECK(fs::exists(d / "r" / f));
  CHECK(fs::exists(d / "a" / "answer.json"));
  const auto log = nlohmann::json::parse(slurp(d / "r" / "metrics.jsonl"));
  CHECK(log["epoch"] == 1);
  CHECK(log["split"] == "dev");
  const auto m = nlohmann::json::parse(slurp(d / "r" / "manifest.json"));
  CHECK(m["config"]["model"]["hidden"] == 8);
  CHECK(m["config"]["train"]["epochs"] == 1);
}

TEST_CASE("config file sits between defaults and flags") {
  const auto& d = trained();
  const auto cfg = scratch() / "cfg.json";
  std::ofstream(cfg) << R"({"model": {"hidden": 12, "feed_forward": 16, "layers": 1, "heads": 2},
                            "train": {"epochs": 1, "learning_rate": 0.01}})";
  const auto out = scratch() / "r_cfg";
  REQUIRE(call({"train-reason", "--data", (d / "data").string(), "--out", out.string(), "--config", cfg.string(),
                "--lr", "0.002", "--seed", "9"})
              .code == 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["config"]["model"]["hidden"] == 12);
  CHECK(m["config"]["model"]["n_max"] == 64);
  CHECK(m["config"]["train"]["learning_rate"] == doctest::Approx(0.002));
  CHECK(m["config"]["model"]["seed"] == 9);
  CHECK(m["config"]["train"]["seed"] == 9);
}

TEST_CASE("eval prints the module table and one accuracy line") {
  const auto& d = trained();
  const auto before = slurp(d / "data" / "test.jsonl");
  const auto r = call({"eval", "--reason", (d / "r").string(), "--answer", (d / "a").string(), "--data",
                       (d / "data" / "test").string(), "--out", (scratch() / "eval").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("cause") != std::string::npos);
  std::size_t lines = 0, pos = 0;
  while ((pos = r.out.find("qa_accuracy", pos)) != std::string::npos) ++lines, ++pos;
  CHECK(lines == 1);
  CHECK(r.out.find("/16)") != std::string::npos);
  CHECK(slurp(d / "data" / "test.jsonl") == before);
  const auto rep = nlohmann::json::parse(slurp(scratch() / "eval" / "report.json"));
  CHECK(rep["qa"]["total"] == 16);
  CHECK(fs::exists(scratch() / "eval" / "manifest.json"));
}

TEST_CASE("trace by id and infer from flags") {
  const auto& d = trained();
  const auto first = nlohmann::json::parse(slurp(d / "data" / "dev.jsonl").substr(0, slurp(d / "data" / "dev.jsonl").find('\n')));
  const std::string id = first["id"];
  auto r = call({"trace", "--data", (d / "data" / "dev").string(), "--answer", (d / "a").string(), "--id", id,
                 "--format", "json"});
  REQUIRE(r.code == 0);
  const auto rec = nlohmann::json::parse(r.out);
  CHECK(rec["id"] == id);
  CHECK(rec.contains("synthetic_text"));
  CHECK(call({"trace", "--data", (d / "data" / "dev").string(), "--answer", (d / "a").string(), "--id", "nope"}).code ==
        2);

  r = call({"infer", "--reason", (d / "r").string(), "--answer", (d / "a").string(), "--knowledge",
            "More mass gives more gravity.", "--question", "If mass grows, gravity will", "--options", "fall",
            "rise", "--force-chain", "prediction"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Prediction") != std::string::npos);
  CHECK(call({"infer", "--reason", (d / "r").string(), "--answer", (d / "a").string(), "--question", "q"}).code == 1);
}
