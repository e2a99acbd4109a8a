#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spot/fixture_server.hpp"
#include "spot/spot.hpp"

namespace py = pybind11;
using namespace spot;

namespace {

std::vector<double> as_vector(const py::iterable& xs) {
  std::vector<double> out;
  for (auto x : xs) out.push_back(x.cast<double>());
  return out;
}

py::dict matrix_dict(const EvalMatrix& m) {
  py::dict cells;
  for (std::size_t r = 0; r < m.evaluators.size(); ++r) {
    for (std::size_t c = 0; c < m.sources.size(); ++c) {
      const auto& cell = m.cells[r][c];
      py::dict d;
      d["mean"] = cell.mean;
      d["std"] = cell.std;
      d["n"] = cell.n;
      d["scores"] = cell.scores;
      cells[py::make_tuple(m.evaluators[r], m.sources[c])] = d;
    }
  }
  py::dict out;
  out["evaluators"] = m.evaluators;
  out["sources"] = m.sources;
  out["cells"] = cells;
  out["csv"] = matrix_to_csv(m);
  out["ratios"] = py::module_::import("json").attr("loads")(ratios_to_json(ratios(m)).dump());
  return out;
}

}  // namespace

PYBIND11_MODULE(_spot, m) {
  m.doc() = "Originality-score detection of machine-generated text";

  static py::exception<Error> spot_error(m, "SpotError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(spot_error, e.what());
    }
  });

  py::enum_<Label>(m, "Label").value("human", Label::human).value("llm", Label::llm);

  py::class_<OriginalityReport>(m, "OriginalityReport")
      .def_readonly("per_token", &OriginalityReport::per_token)
      .def_readonly("aggregate", &OriginalityReport::aggregate)
      .def_readonly("vocab_size", &OriginalityReport::vocab_size)
      .def_readonly("model_id", &OriginalityReport::model_id)
      .def_readonly("context_len", &OriginalityReport::context_len)
      .def_readonly("sequence_digest", &OriginalityReport::sequence_digest)
      .def("__repr__", [](const OriginalityReport& r) {
        return "<OriginalityReport " + r.model_id + " aggregate=" + std::to_string(r.aggregate) + ">";
      });

  py::class_<ThresholdProfile>(m, "ThresholdProfile")
      .def(py::init([](std::string model_id, double rho) {
             ThresholdProfile p;
             p.model_id = std::move(model_id);
             p.rho = rho;
             p.validate();
             return p;
           }),
           py::arg("model_id"), py::arg("rho"))
      .def_readonly("model_id", &ThresholdProfile::model_id)
      .def_readonly("rho", &ThresholdProfile::rho)
      .def_readonly("balanced_accuracy", &ThresholdProfile::balanced_accuracy)
      .def_readonly("degenerate", &ThresholdProfile::degenerate)
      .def_property_readonly("method",
                             [](const ThresholdProfile& p) {
                               return p.method == CalibrationMethod::sweep ? "sweep" : "percentile";
                             })
      .def("to_json", [](const ThresholdProfile& p) { return profile_to_json(p).dump(); })
      .def_static("from_json", [](const std::string& s) { return profile_from_json(nlohmann::json::parse(s)); });

  py::class_<Verdict>(m, "Verdict")
      .def_property_readonly("label", [](const Verdict& v) { return std::string(label_name(v.label)); })
      .def_readonly("score", &Verdict::score)
      .def_readonly("rho", &Verdict::rho)
      .def_readonly("margin", &Verdict::margin);

  py::class_<ScoringModel, std::shared_ptr<ScoringModel>>(m, "ScoringModel")
      .def_property_readonly("model_id", &ScoringModel::model_id)
      .def_property_readonly("vocab_size", &ScoringModel::vocab_size)
      .def_property_readonly("window", &ScoringModel::window)
      .def(
          "ranks",
          [](const ScoringModel& self, const std::vector<TokenId>& tokens, std::size_t context_len) {
            return ranks_for(self, tokens, context_len).ranks;
          },
          py::arg("tokens"), py::arg("context_len"), py::call_guard<py::gil_scoped_release>())
      .def(
          "score",
          [](const ScoringModel& self, const std::vector<TokenId>& tokens, std::size_t context_len) {
            return score_sequence(TokenSequence(tokens, context_len), self);
          },
          py::arg("tokens"), py::arg("context_len"), py::call_guard<py::gil_scoped_release>())
      .def(
          "generate",
          [](const ScoringModel& self, const std::vector<TokenId>& context, std::size_t s) {
            return greedy_generate(self, context, s);
          },
          py::arg("context"), py::arg("length"), py::call_guard<py::gil_scoped_release>())
      .def("encode",
           [](const ScoringModel& self, const std::string& text) {
             const auto* v = self.vocabulary();
             if (!v) throw Error(Errc::invalid_argument, "invalid argument: backend has no tokenizer");
             return v->encode_text(text);
           })
      .def("decode", [](const ScoringModel& self, const std::vector<TokenId>& ids) {
        const auto* v = self.vocabulary();
        if (!v) throw Error(Errc::invalid_argument, "invalid argument: backend has no tokenizer");
        return v->decode_text(ids);
      });

  py::class_<NgramModel, ScoringModel, std::shared_ptr<NgramModel>>(m, "NgramModel")
      .def_static(
          "train",
          [](const std::vector<std::string>& texts, int order, double smoothing_k, std::size_t vocab_cap,
             std::size_t window, const std::string& model_id) {
            NgramOptions o;
            o.order = order;
            o.smoothing_k = smoothing_k;
            o.vocab_cap = vocab_cap;
            o.window = window;
            o.model_id = model_id;
            py::gil_scoped_release release;
            return std::make_shared<NgramModel>(train_ngram(texts, o));
          },
          py::arg("texts"), py::arg("order") = 3, py::arg("smoothing_k") = 0.1, py::arg("vocab_cap") = 50000,
          py::arg("window") = 4096, py::arg("model_id") = "ngram")
      .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<NgramModel>(NgramModel::load(p)); })
      .def("save", &NgramModel::save)
      .def_property_readonly("order", &NgramModel::order)
      .def("distribution", [](const NgramModel& self, const std::vector<TokenId>& history) {
        return self.distribution(history);
      });

  py::class_<RemoteModel, ScoringModel, std::shared_ptr<RemoteModel>>(m, "RemoteModel")
      .def(py::init([](std::string endpoint, std::string model, int timeout_ms, std::size_t max_batch,
                       std::optional<std::string> auth_token, std::optional<std::size_t> vocab_size,
                       std::optional<std::size_t> window) {
             RemoteBackendConfig c;
             c.endpoint = std::move(endpoint);
             c.model_name = std::move(model);
             c.timeout = std::chrono::milliseconds(timeout_ms);
             c.max_batch = max_batch;
             c.auth_token = std::move(auth_token);
             c.vocab_size = vocab_size;
             c.window = window;
             return std::make_shared<RemoteModel>(c);
           }),
           py::arg("endpoint"), py::arg("model"), py::arg("timeout_ms") = 30000, py::arg("max_batch") = 4,
           py::arg("auth_token") = py::none(), py::arg("vocab_size") = py::none(), py::arg("window") = py::none());

  py::class_<FixtureServer>(m, "FixtureServer")
      .def(py::init([](std::shared_ptr<ScoringModel> backend, std::optional<std::string> canned, std::string model,
                       std::size_t vocab_size) {
             FixtureServerOptions o;
             o.model_name = backend && model.empty() ? backend->model_id() : model;
             o.backend = backend.get();
             o.canned_ranks_body = std::move(canned);
             o.vocab_size = vocab_size;
             auto server = std::make_unique<FixtureServer>(o);
             server->start();
             return server;
           }),
           py::arg("backend") = nullptr, py::arg("canned") = py::none(), py::arg("model") = "",
           py::arg("vocab_size") = 0, py::keep_alive<1, 2>())
      .def_property_readonly("endpoint", &FixtureServer::endpoint)
      .def_property_readonly("rank_requests", &FixtureServer::rank_requests)
      .def("stop", &FixtureServer::stop);

  m.def("tokenize_words", [](const std::string& text) { return tokenize_words(text); });
  m.def("rank_of", [](const std::vector<double>& logits, TokenId token) { return rank_of(logits, token); },
        py::arg("logits"), py::arg("token"));
  m.def(
      "per_token_scores",
      [](const std::vector<Rank>& ranks, std::size_t vocab_size) {
        return per_token_scores(RankVector{ranks, vocab_size, ""});
      },
      py::arg("ranks"), py::arg("vocab_size"));
  m.def("aggregate_score", [](const std::vector<double>& xs) { return aggregate_score(xs); });
  m.def("classify", &classify, py::arg("score"), py::arg("profile"));

  m.def(
      "calibrate_sweep",
      [](const py::iterable& human, const py::iterable& llm, const std::string& evaluator) {
        return calibrate_sweep({as_vector(human), Label::human, evaluator, {}},
                               {as_vector(llm), Label::llm, evaluator, {}});
      },
      py::arg("human"), py::arg("llm"), py::arg("evaluator"));
  m.def(
      "calibrate_percentile",
      [](const py::iterable& llm, double p, const std::string& evaluator) {
        return calibrate_percentile({as_vector(llm), Label::llm, evaluator, {}}, p);
      },
      py::arg("llm"), py::arg("p") = kDefaultPercentile, py::arg("evaluator"));
  m.def(
      "accuracy",
      [](const py::iterable& human, const py::iterable& llm, const ThresholdProfile& profile) {
        const auto a = accuracy({as_vector(human), Label::human, profile.model_id, {}},
                                {as_vector(llm), Label::llm, profile.model_id, {}}, profile);
        py::dict d;
        d["acc"] = a.acc;
        d["tpr"] = a.tpr;
        d["fpr"] = a.fpr;
        d["balanced_acc"] = a.balanced_acc;
        return d;
      },
      py::arg("human"), py::arg("llm"), py::arg("profile"));
  m.def(
      "kde_density",
      [](const py::iterable& scores, double bandwidth, std::size_t grid_points) {
        const auto c = kde_density({as_vector(scores), Label::human, "", {}}, bandwidth, grid_points);
        return py::make_tuple(c.grid, c.density);
      },
      py::arg("scores"), py::arg("bandwidth") = kDefaultBandwidth, py::arg("grid_points") = kDefaultGridPoints);
  m.def(
      "kde_at", [](const py::iterable& scores, double bandwidth, double x) {
        return kde_at(as_vector(scores), bandwidth, x);
      },
      py::arg("scores"), py::arg("bandwidth"), py::arg("x"));

  m.def(
      "evaluate",
      [](const std::vector<std::string>& texts, const std::map<std::string, std::shared_ptr<ScoringModel>>& models,
         std::size_t context_len, std::size_t completion_len, std::vector<std::string> evaluators,
         std::string pivot) {
        BackendRegistry reg;
        std::vector<std::string> names;
        for (const auto& [name, model] : models) {
          reg.add(name, model);
          names.push_back(name);
        }
        std::vector<Document> docs;
        for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({std::to_string(i), texts[i]});
        if (evaluators.empty()) evaluators = names;
        EvalMatrix matrix;
        {
          py::gil_scoped_release release;
          PairingOptions po;
          po.pivot = std::move(pivot);
          const auto pairs = make_pairs(docs, names, context_len, completion_len, reg, po);
          matrix = run_matrix(pairs, reg, evaluators);
        }
        return matrix_dict(matrix);
      },
      py::arg("texts"), py::arg("models"), py::arg("context_len") = 24, py::arg("completion_len") = 40,
      py::arg("evaluators") = std::vector<std::string>{}, py::arg("pivot") = "");
}
