#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cfexplain/cli.hpp"
#include "cfexplain/datasets.hpp"
#include "cfexplain/dcr_eval.hpp"
#include "cfexplain/errors.hpp"
#include "cfexplain/lexicon_oracle.hpp"
#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/pipelines.hpp"
#include "cfexplain/prompt_templates.hpp"
#include "cfexplain/reporting.hpp"
#include "cfexplain/text_processing.hpp"

namespace py = pybind11;
using namespace cfx;

namespace {

std::shared_ptr<LlmGateway> oracle_gateway(const Lexicon& lexicon, std::uint64_t seed,
                                           double temperature, int max_retries) {
  BackendConfig config;
  config.model_name = "lexicon-oracle";
  config.temperature = temperature;
  config.max_retries = max_retries;
  return std::make_shared<LlmGateway>(std::make_shared<LexiconOracle>(lexicon, seed), config);
}

std::shared_ptr<LlmGateway> remote_gateway(const std::string& endpoint, const std::string& model,
                                           double temperature, int max_retries, double timeout_s,
                                           const std::string& api_key_env) {
  BackendConfig config;
  config.endpoint_url = endpoint;
  config.model_name = model;
  config.temperature = temperature;
  config.max_retries = max_retries;
  config.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
  config.api_key_env_var = api_key_env;
  return std::make_shared<LlmGateway>(std::make_shared<HttpBackend>(config), config);
}

Document make_document(std::string text, Label gold, DatasetKind kind, std::string id) {
  Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  d.gold_label = gold;
  d.dataset_kind = kind;
  d.word_count = static_cast<int>(tokenize(d.text).tokens.size());
  return d;
}

Bindings bindings_from(const py::dict& values) {
  Bindings b;
  for (const auto& [key_obj, value] : values) {
    const auto key = key_obj.cast<std::string>();
    if (key == "review") b.review = value.cast<std::string>();
    else if (key == "counterfactual") b.counterfactual = value.cast<std::string>();
    else if (key == "masked_review") b.masked_review = value.cast<std::string>();
    else if (key == "new_review") b.new_review = value.cast<std::string>();
    else if (key == "classification1") b.classification1 = value.cast<Label>();
    else if (key == "classification2") b.classification2 = value.cast<Label>();
    else if (key == "prior_words") b.prior_words = value.cast<std::vector<std::string>>();
    else throw py::key_error("unknown binding '" + key + "'");
  }
  return b;
}

}  // namespace

PYBIND11_MODULE(_cfexplain, m) {
  m.doc() = "Counterfactual-guided top-k word explanations for black-box sentiment classifiers";

  static py::exception<Error> base_error(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base_error.ptr());
  py::register_exception<MissingBinding>(m, "MissingBinding", base_error.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base_error.ptr());
  py::register_exception<LengthMismatch>(m, "LengthMismatch", base_error.ptr());
  py::register_exception<AuthError>(m, "AuthError", base_error.ptr());
  py::register_exception<EmptyInput>(m, "EmptyInput", base_error.ptr());

  py::enum_<Label>(m, "Label").value("NEGATIVE", Label::Negative).value("POSITIVE", Label::Positive);
  py::enum_<DatasetKind>(m, "DatasetKind")
      .value("AMAZON", DatasetKind::Amazon)
      .value("SST2", DatasetKind::Sst2)
      .value("IMDB", DatasetKind::Imdb);
  py::enum_<Approach>(m, "Approach")
      .value("DP", Approach::DP)
      .value("CFP", Approach::CFP)
      .value("CFS", Approach::CFS);
  py::enum_<PromptStep>(m, "PromptStep")
      .value("DP_TOPK", PromptStep::DpTopK)
      .value("CLASSIFY_ONLY", PromptStep::ClassifyOnly)
      .value("MAKE_COUNTERFACTUAL", PromptStep::MakeCounterfactual)
      .value("CLASSIFY_COUNTERFACTUAL", PromptStep::ClassifyCounterfactual)
      .value("CFP_TOPK_FROM_PAIR", PromptStep::CfpTopKFromPair)
      .value("CFS_REFINE", PromptStep::CfsRefine)
      .value("DCR_FILL_MASKS", PromptStep::DcrFillMasks)
      .value("DCR_RECLASSIFY", PromptStep::DcrReclassify);

  py::class_<Document>(m, "Document")
      .def(py::init(&make_document), py::arg("text"), py::arg("gold_label") = Label::Negative,
           py::arg("dataset_kind") = DatasetKind::Amazon, py::arg("id") = "0")
      .def_readwrite("id", &Document::id)
      .def_readwrite("text", &Document::text)
      .def_readwrite("gold_label", &Document::gold_label)
      .def_readwrite("dataset_kind", &Document::dataset_kind)
      .def_readonly("word_count", &Document::word_count)
      .def_readonly("truncated", &Document::truncated)
      .def("__repr__", [](const Document& d) { return "<Document id=" + d.id + ">"; });

  py::class_<Lexicon>(m, "Lexicon")
      .def_static("parse", &Lexicon::parse)
      .def_static("load", &Lexicon::load)
      .def("polarity", &Lexicon::polarity)
      .def_property_readonly("positive_filler", &Lexicon::positive_filler)
      .def_property_readonly("negative_filler", &Lexicon::negative_filler);

  py::class_<LexiconOracle>(m, "LexiconOracle")
      .def(py::init<Lexicon, std::uint64_t>(), py::arg("lexicon"), py::arg("seed") = 0)
      .def("polarity_sum", &LexiconOracle::polarity_sum)
      .def("classify", &LexiconOracle::classify)
      .def("top_k", py::overload_cast<std::string_view, int>(&LexiconOracle::top_k, py::const_))
      .def("counterfactual", [](const LexiconOracle& o, std::string_view text) {
        const auto edit = o.counterfactual(text);
        return py::make_tuple(edit.text, edit.flipped);
      })
      .def("fill_masks", &LexiconOracle::fill_masks);

  py::class_<CallStats>(m, "CallStats")
      .def_readonly("calls_made", &CallStats::calls_made)
      .def_readonly("retries_used", &CallStats::retries_used)
      .def_readonly("parse_failures", &CallStats::parse_failures);

  py::class_<LlmGateway, std::shared_ptr<LlmGateway>>(m, "Gateway")
      .def_static("oracle", &oracle_gateway, py::arg("lexicon"), py::arg("seed") = 0,
                  py::arg("temperature") = 0.0, py::arg("max_retries") = 3)
      .def_static("remote", &remote_gateway, py::arg("endpoint"), py::arg("model"),
                  py::arg("temperature") = 0.0, py::arg("max_retries") = 3,
                  py::arg("timeout") = 60.0, py::arg("api_key_env") = "OPENAI_API_KEY")
      .def("stats", &LlmGateway::stats)
      .def_property_readonly("model_name",
                             [](const LlmGateway& g) { return g.config().model_name; })
      .def_property_readonly("temperature",
                             [](const LlmGateway& g) { return g.config().temperature; });

  py::class_<ExplanationResult>(m, "ExplanationResult")
      .def_readonly("document_id", &ExplanationResult::document_id)
      .def_readonly("approach", &ExplanationResult::approach)
      .def_readonly("k", &ExplanationResult::k)
      .def_readonly("predicted_label", &ExplanationResult::predicted_label)
      .def_readonly("counterfactual_text", &ExplanationResult::counterfactual_text)
      .def_readonly("counterfactual_label", &ExplanationResult::counterfactual_label)
      .def_readonly("initial_words", &ExplanationResult::initial_words)
      .def_readonly("top_words", &ExplanationResult::top_words)
      .def_readonly("fallback_used", &ExplanationResult::fallback_used)
      .def_readonly("calls", &ExplanationResult::calls)
      .def_readonly("warnings", &ExplanationResult::warnings);

  m.def("run_dp", [](const Document& d, int k, LlmGateway& g) { return run_dp(d, k, g); });
  m.def("run_cfp", [](const Document& d, int k, LlmGateway& g) { return run_cfp(d, k, g); });
  m.def("run_cfs", [](const Document& d, int k, LlmGateway& g) { return run_cfs(d, k, g); });
  m.def("run_approach", [](Approach a, const Document& d, int k, LlmGateway& g) {
    return run_approach(a, d, k, g);
  });

  py::class_<WeightVector>(m, "WeightVector")
      .def_readonly("weights", &WeightVector::weights)
      .def_readonly("runs", &WeightVector::runs)
      .def_readonly("excluded_runs", &WeightVector::excluded_runs);
  m.def(
      "run_sampled",
      [](const Document& d, int k, int n, Approach a, LlmGateway& g, bool allow_zero) {
        return run_sampled(d, k, n, a, g, SamplingOptions{allow_zero});
      },
      py::arg("doc"), py::arg("k"), py::arg("n"), py::arg("approach"), py::arg("gateway"),
      py::arg("allow_zero_temperature") = false);

  py::class_<MaskViolation>(m, "MaskViolation")
      .def_readonly("segment_index", &MaskViolation::segment_index)
      .def_readonly("expected", &MaskViolation::expected)
      .def_readonly("actual", &MaskViolation::actual);
  py::class_<DcrRecord>(m, "DcrRecord")
      .def_readonly("score", &DcrRecord::score)
      .def_readonly("masked_text", &DcrRecord::masked_text)
      .def_readonly("filled_text", &DcrRecord::filled_text)
      .def_readonly("new_label", &DcrRecord::new_label)
      .def_readonly("original_label", &DcrRecord::original_label)
      .def_readonly("mask_violations", &DcrRecord::mask_violations)
      .def_readonly("excluded", &DcrRecord::excluded)
      .def_readonly("reason", &DcrRecord::reason);
  m.def("decision_changing_score", &decision_changing_score);
  m.def("dcr", [](const std::vector<DcrRecord>& records) {
    const DcrSummary s = dcr(records);
    return py::dict(py::arg("dcr") = s.dcr, py::arg("n_scored") = s.n_scored,
                    py::arg("n_excluded") = s.n_excluded, py::arg("accuracy") = s.accuracy);
  });

  m.def("mask_words", [](const std::string& text, const std::vector<std::string>& words) {
    const MaskedDocument md = mask_words(text, words);
    return py::make_tuple(md.masked_text, md.words_masked, md.no_match);
  });
  m.def("validate_mask_only_edits",
        py::overload_cast<std::string_view, std::string_view>(&validate_mask_only_edits));
  m.def("normalize_word", &normalize_word);

  m.def(
      "render",
      [](PromptStep step, DatasetKind dataset, int k, const py::dict& values) {
        return render(TemplateId{step, dataset, k}, bindings_from(values));
      },
      py::arg("step"), py::arg("dataset"), py::arg("k"), py::arg("bindings"));
  m.def("parse_tagged", &parse_tagged);
  m.def("parse_label", &parse_label);
  m.def("parse_class_words", [](std::string_view reply, int k) {
    const ClassWords cw = parse_class_words(reply, k);
    return py::make_tuple(cw.label, cw.words);
  });

  m.def("load_corpus", [](const std::filesystem::path& path, DatasetKind kind) {
    return load_corpus(path, kind).documents;
  });
  m.def(
      "sample",
      [](const std::vector<Document>& corpus, int n, std::uint64_t seed, std::optional<int> max_words) {
        return sample(corpus, SamplePlan{n, seed, max_words});
      },
      py::arg("corpus"), py::arg("n") = 100, py::arg("seed") = 0, py::arg("max_words") = py::none());
  m.def("stats", [](const std::vector<Document>& docs, const std::vector<int>& ks) {
    const DatasetStats s = stats(docs, ks);
    return py::make_tuple(s.avg_words, s.k_proportions);
  });

  m.def("render_heatmap", &render_heatmap);
  m.def("report_table", [](const std::filesystem::path& log) {
    return build_table(load_runs(log)).to_text();
  });
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
