#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/pipelines.hpp"
#include "cfexplain/text_processing.hpp"
#include "cfexplain/types.hpp"

namespace cfx {

/// Outcome of masking one explanation's words and asking the same model to
/// fill the masks toward the opposite sentiment.
struct DcrRecord {
  std::string document_id;
  Approach approach = Approach::DP;
  int k = 0;
  Label gold_label = Label::Negative;
  Label original_label = Label::Negative;
  std::string masked_text;
  std::string filled_text;
  std::optional<Label> new_label;
  int score = 0;
  std::vector<MaskViolation> mask_violations;
  std::vector<std::string> unmatched_words;
  bool excluded = false;
  // Why the record scored 0 without a fill ("NoMatch") or why it was excluded.
  std::string reason;
  CallStats calls;

  bool operator==(const DcrRecord&) const = default;
};

struct DcrSummary {
  Approach approach = Approach::DP;
  int k = 0;
  double dcr = 0.0;
  int n_scored = 0;
  int n_excluded = 0;
  int n_mask_violations = 0;
  double accuracy = 0.0;
};

/// Masks `explanation.top_words` in the document, asks for an opposite-
/// sentiment fill, reclassifies the fill with a fresh transcript and scores
/// 1 on a flip. Backend failures produce an excluded record, not an exception.
DcrRecord decision_changing_score(const Document& doc, const ExplanationResult& explanation,
                                  LlmGateway& gateway);

/// Mean score over non-excluded records. Accuracy is the share of all
/// records whose original label matches gold. Throws EmptyInput when nothing
/// is scorable.
DcrSummary dcr(const std::vector<DcrRecord>& records);

}  // namespace cfx
