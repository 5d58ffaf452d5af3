#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qreason/cli/cli.hpp"
#include "qreason/datakit/dataset.hpp"
#include "qreason/datakit/generator.hpp"
#include "qreason/deduction/chain.hpp"
#include "qreason/deduction/deduce.hpp"
#include "qreason/error.hpp"
#include "qreason/evalkit/metrics.hpp"
#include "qreason/textenc/tokenizer.hpp"
#include "qreason/trainer/gradient_audit.hpp"

namespace py = pybind11;
using namespace qreason;

namespace {

std::tuple<int, std::string, std::string> run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qreason");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return {code, out.str(), err.str()};
}

std::tuple<std::string, std::string, std::string> generate_corpus(const std::string& config) {
  const auto cfg = data::generator_config_from_json(nlohmann::json::parse(config));
  const auto corpus = data::generate_synthetic_corpus(cfg);
  return {data::serialize_dataset(corpus.train.examples), data::serialize_dataset(corpus.dev.examples),
          data::serialize_dataset(corpus.test.examples)};
}

std::string deduce(const std::string& chain, const std::string& polarity, const std::string& change) {
  const auto c = parse_chain(chain);
  const auto p = parse_polarity(polarity);
  if (!c || !p) throw InvalidInput("deduce: unknown chain or polarity");
  if (*c == Chain::Prediction) {
    const auto v = parse_value(change);
    if (!v) throw InvalidInput("deduce: value change must be up or down");
    return std::string(to_string(deduction::deduce_prediction(*p, *v)));
  }
  const auto o = parse_ordering(change);
  if (!o) throw InvalidInput("deduce: ordering must be > or <");
  return std::string(to_string(deduction::deduce_comparison(*p, *o)));
}

std::optional<std::string> gold_text(const std::string& record) {
  const auto example = data::parse_record(nlohmann::json::parse(record), 1);
  const auto s = deduction::gold_synthetic(example);
  if (!s) return std::nullopt;
  return s->text;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = QREASON_VERSION;

  m.def("run_cli", &run_cli, py::arg("args"), "Run a qreason subcommand in process; returns (code, stdout, stderr).");

  m.def(
      "tokenize",
      [](const std::string& text) {
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
        for (const auto& t : text::tokenize(text)) out.emplace_back(t.text, t.begin, t.end);
        return out;
      },
      py::arg("text"));

  m.def("token_f1", py::overload_cast<std::size_t, std::size_t, std::size_t, std::size_t>(&eval::token_f1),
        py::arg("pred_start"), py::arg("pred_end"), py::arg("gold_start"), py::arg("gold_end"));
  m.def("fuzzy_f1", &eval::fuzzy_f1, py::arg("f1"));

  m.def("deduce", &deduce, py::arg("chain"), py::arg("polarity"), py::arg("change"));
  m.def("generate_corpus", &generate_corpus, py::arg("config_json"));
  m.def("gold_text", &gold_text, py::arg("record_json"));

  m.def(
      "gradient_audit",
      [](std::uint64_t seed) {
        train::GradientAuditConfig c;
        c.seed = seed;
        train::GradientAudit a;
        {
          py::gil_scoped_release release;
          a = train::audit_model_gradients(c);
        }
        py::dict d;
        d["parameters"] = a.parameters;
        d["full"] = a.full.max_rel_error;
        d["heads"] = a.heads.max_rel_error;
        d["worst"] = a.full.worst_name;
        return d;
      },
      py::arg("seed") = train::GradientAuditConfig{}.seed);
}
