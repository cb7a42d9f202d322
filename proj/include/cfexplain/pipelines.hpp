#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/types.hpp"

namespace cfx {

struct ExplanationResult {
  std::string document_id;
  Approach approach = Approach::DP;
  int k = 0;
  Label predicted_label = Label::Negative;
  std::optional<std::string> counterfactual_text;
  std::optional<Label> counterfactual_label;
  // CFS only: the direct-prompting words the refinement started from.
  std::vector<std::string> initial_words;
  std::vector<std::string> top_words;
  bool fallback_used = false;
  CallStats calls;
  // "ShortList", "TruncatedList", "OutOfSource:<word>", "FallbackLabelMismatch:<label>".
  std::vector<std::string> warnings;

  bool operator==(const ExplanationResult&) const = default;
};

/// Selection frequency of each token over n sampled explanation runs.
struct WeightVector {
  std::string document_id;
  std::vector<double> weights;  // aligned with tokenize(doc.text).tokens
  int runs = 0;                 // runs that contributed (denominator)
  int requested_runs = 0;
  int excluded_runs = 0;
  int k = 0;
  Approach approach = Approach::CFP;

  bool operator==(const WeightVector&) const = default;
};

struct PipelineOptions {
  // Forwarded on every call; separates sampling runs.
  std::uint64_t sample_stream = 0;
};

/// Direct prompting: one call returning the label and k words.
ExplanationResult run_dp(const Document& doc, int k, LlmGateway& gateway,
                         const PipelineOptions& options = {});

/// Classify, ask for a counterfactual, classify it, then ask for the top-k
/// words given both texts. Falls back to run_dp when the counterfactual does
/// not flip the label.
ExplanationResult run_cfp(const Document& doc, int k, LlmGateway& gateway,
                          const PipelineOptions& options = {});

/// Direct prompting first, then counterfactual, then refinement of the
/// initial words. Falls back to direct prompting on a non-flip.
ExplanationResult run_cfs(const Document& doc, int k, LlmGateway& gateway,
                          const PipelineOptions& options = {});

ExplanationResult run_approach(Approach approach, const Document& doc, int k,
                               LlmGateway& gateway, const PipelineOptions& options = {});

struct SamplingOptions {
  // Allows temperature 0; every run then yields the same words.
  bool allow_zero_temperature = false;
};

/// Runs CFP or CFS `n` times and counts, per token, how often its word was
/// among the returned top-k. A failed run is retried once, then dropped.
/// Throws std::invalid_argument on n <= 1, DP, or temperature 0 without the
/// override; AllRunsFailed when no run succeeds.
WeightVector run_sampled(const Document& doc, int k, int n, Approach approach,
                         LlmGateway& gateway, const SamplingOptions& options = {});

}  // namespace cfx
