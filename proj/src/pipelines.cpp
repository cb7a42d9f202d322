#include "cfexplain/pipelines.hpp"

#include <stdexcept>
#include <unordered_set>

#include "cfexplain/errors.hpp"
#include "cfexplain/text_processing.hpp"

namespace cfx {

namespace {

// Runs one step; any unrecoverable backend outcome fails the whole document.
ParsedReply step(LlmGateway& gateway, const BackendCall& call, const Document& doc,
                 CallStats& tally) {
  try {
    return gateway.complete_parsed(call, &tally);
  } catch (const ParseExhausted& e) {
    throw DocumentFailed("document " + doc.id + ": " + e.what());
  } catch (const TransportError& e) {
    throw DocumentFailed("document " + doc.id + ": transport: " + e.what());
  }
}

BackendCall make_call(PromptStep step_id, const Document& doc, int k, Bindings bindings,
                      std::vector<ChatTurn> history, const PipelineOptions& options) {
  BackendCall call = BackendCall::make({step_id, doc.dataset_kind, k}, std::move(bindings),
                                       std::move(history));
  call.sample_stream = options.sample_stream;
  return call;
}

std::vector<ChatTurn> with_reply(const BackendCall& call, const ParsedReply& reply) {
  std::vector<ChatTurn> history = call.transcript;
  history.push_back({ChatTurn::Role::Assistant, reply.raw});
  return history;
}

void add_parse_warnings(ExplanationResult& result, const std::vector<ParseWarning>& warnings) {
  for (ParseWarning w : warnings) result.warnings.emplace_back(to_string(w));
}

void check_sources(ExplanationResult& result, const Document& doc) {
  const TokenizedText tokenized = tokenize(doc.text);
  for (const auto& word : result.top_words) {
    if (!word_in_text(tokenized, word)) result.warnings.push_back("OutOfSource:" + word);
  }
}

void validate_k(int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
}

// Shared CFP/CFS middle section: counterfactual, then its classification.
struct CounterfactualSteps {
  std::string text;
  Label label;
  std::vector<ChatTurn> history;
};

CounterfactualSteps counterfactual_steps(const Document& doc, int k, Label predicted,
                                         std::vector<ChatTurn> history, LlmGateway& gateway,
                                         const PipelineOptions& options, CallStats& tally) {
  Bindings make_bindings;
  make_bindings.review = doc.text;
  make_bindings.classification1 = predicted;
  const BackendCall make = make_call(PromptStep::MakeCounterfactual, doc, k,
                                     std::move(make_bindings), std::move(history), options);
  const ParsedReply cf = step(gateway, make, doc, tally);

  Bindings classify_bindings;
  classify_bindings.counterfactual = cf.text;
  const BackendCall classify = make_call(PromptStep::ClassifyCounterfactual, doc, k,
                                         std::move(classify_bindings), with_reply(make, cf),
                                         options);
  const ParsedReply label = step(gateway, classify, doc, tally);
  return {cf.text, *label.label, with_reply(classify, label)};
}

void apply_dp_fallback(ExplanationResult& result, const Document& doc, int k,
                       LlmGateway& gateway, const PipelineOptions& options) {
  ExplanationResult dp = run_dp(doc, k, gateway, options);
  result.top_words = std::move(dp.top_words);
  result.calls += dp.calls;
  result.fallback_used = true;
  for (auto& w : dp.warnings) {
    if (w.rfind("OutOfSource:", 0) != 0) result.warnings.push_back(std::move(w));
  }
  if (dp.predicted_label != result.predicted_label) {
    result.warnings.push_back("FallbackLabelMismatch:" + std::string(to_string(dp.predicted_label)));
  }
}

}  // namespace

ExplanationResult run_dp(const Document& doc, int k, LlmGateway& gateway,
                         const PipelineOptions& options) {
  validate_k(k);
  ExplanationResult result;
  result.document_id = doc.id;
  result.approach = Approach::DP;
  result.k = k;

  Bindings bindings;
  bindings.review = doc.text;
  const BackendCall call = make_call(PromptStep::DpTopK, doc, k, std::move(bindings), {}, options);
  const ParsedReply reply = step(gateway, call, doc, result.calls);
  result.predicted_label = *reply.label;
  result.top_words = reply.words;
  add_parse_warnings(result, reply.warnings);
  check_sources(result, doc);
  return result;
}

ExplanationResult run_cfp(const Document& doc, int k, LlmGateway& gateway,
                          const PipelineOptions& options) {
  validate_k(k);
  ExplanationResult result;
  result.document_id = doc.id;
  result.approach = Approach::CFP;
  result.k = k;

  Bindings classify_bindings;
  classify_bindings.review = doc.text;
  const BackendCall classify =
      make_call(PromptStep::ClassifyOnly, doc, k, std::move(classify_bindings), {}, options);
  const ParsedReply label = step(gateway, classify, doc, result.calls);
  result.predicted_label = *label.label;

  CounterfactualSteps cf = counterfactual_steps(doc, k, result.predicted_label,
                                                with_reply(classify, label), gateway, options,
                                                result.calls);
  result.counterfactual_text = cf.text;
  result.counterfactual_label = cf.label;

  if (cf.label == result.predicted_label) {
    apply_dp_fallback(result, doc, k, gateway, options);
  } else {
    Bindings pair_bindings;
    pair_bindings.review = doc.text;
    pair_bindings.counterfactual = cf.text;
    pair_bindings.classification1 = result.predicted_label;
    const BackendCall pair = make_call(PromptStep::CfpTopKFromPair, doc, k,
                                       std::move(pair_bindings), std::move(cf.history), options);
    const ParsedReply words = step(gateway, pair, doc, result.calls);
    result.top_words = words.words;
    add_parse_warnings(result, words.warnings);
  }
  check_sources(result, doc);
  return result;
}

ExplanationResult run_cfs(const Document& doc, int k, LlmGateway& gateway,
                          const PipelineOptions& options) {
  validate_k(k);
  ExplanationResult result;
  result.document_id = doc.id;
  result.approach = Approach::CFS;
  result.k = k;

  Bindings dp_bindings;
  dp_bindings.review = doc.text;
  const BackendCall dp = make_call(PromptStep::DpTopK, doc, k, std::move(dp_bindings), {}, options);
  const ParsedReply initial = step(gateway, dp, doc, result.calls);
  result.predicted_label = *initial.label;
  result.initial_words = initial.words;

  CounterfactualSteps cf = counterfactual_steps(doc, k, result.predicted_label,
                                                with_reply(dp, initial), gateway, options,
                                                result.calls);
  result.counterfactual_text = cf.text;
  result.counterfactual_label = cf.label;

  if (cf.label == result.predicted_label) {
    apply_dp_fallback(result, doc, k, gateway, options);
  } else {
    Bindings refine_bindings;
    refine_bindings.review = doc.text;
    refine_bindings.counterfactual = cf.text;
    refine_bindings.classification1 = result.predicted_label;
    refine_bindings.classification2 = cf.label;
    refine_bindings.prior_words = result.initial_words;
    const BackendCall refine = make_call(PromptStep::CfsRefine, doc, k,
                                         std::move(refine_bindings), std::move(cf.history),
                                         options);
    const ParsedReply words = step(gateway, refine, doc, result.calls);
    result.top_words = words.words;
    add_parse_warnings(result, words.warnings);
  }
  check_sources(result, doc);
  return result;
}

ExplanationResult run_approach(Approach approach, const Document& doc, int k,
                               LlmGateway& gateway, const PipelineOptions& options) {
  switch (approach) {
    case Approach::DP: return run_dp(doc, k, gateway, options);
    case Approach::CFP: return run_cfp(doc, k, gateway, options);
    case Approach::CFS: return run_cfs(doc, k, gateway, options);
  }
  throw std::invalid_argument("unknown approach");
}

WeightVector run_sampled(const Document& doc, int k, int n, Approach approach,
                         LlmGateway& gateway, const SamplingOptions& options) {
  if (n <= 1) throw std::invalid_argument("sampling needs n > 1 runs");
  if (approach == Approach::DP) throw std::invalid_argument("sampling runs CFP or CFS, not DP");
  if (gateway.config().temperature <= 0.0 && !options.allow_zero_temperature) {
    throw std::invalid_argument(
        "sampling needs temperature > 0 (or the zero-temperature override)");
  }
  validate_k(k);

  const TokenizedText tokenized = tokenize(doc.text);
  std::vector<int> counts(tokenized.tokens.size(), 0);
  WeightVector out;
  out.document_id = doc.id;
  out.requested_runs = n;
  out.k = k;
  out.approach = approach;

  for (int r = 0; r < n; ++r) {
    std::optional<ExplanationResult> run;
    for (std::uint64_t stream : {static_cast<std::uint64_t>(r) + 1,
                                 static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(r) + 1}) {
      try {
        run = run_approach(approach, doc, k, gateway, PipelineOptions{stream});
        break;
      } catch (const DocumentFailed&) {
      }
    }
    if (!run) {
      ++out.excluded_runs;
      continue;
    }
    std::unordered_set<std::string> chosen;
    for (const auto& w : run->top_words) chosen.insert(normalize_word(w));
    for (std::size_t i = 0; i < tokenized.tokens.size(); ++i) {
      const Token& t = tokenized.tokens[i];
      if (is_matchable(t) && chosen.count(t.normalized)) ++counts[i];
    }
  }

  out.runs = n - out.excluded_runs;
  if (out.runs == 0) throw AllRunsFailed("all " + std::to_string(n) + " sampling runs failed");
  out.weights.reserve(counts.size());
  for (int c : counts) out.weights.push_back(static_cast<double>(c) / out.runs);
  return out;
}

}  // namespace cfx
