#include "cfexplain/dcr_eval.hpp"

#include "cfexplain/errors.hpp"

namespace cfx {

DcrRecord decision_changing_score(const Document& doc, const ExplanationResult& explanation,
                                  LlmGateway& gateway) {
  DcrRecord record;
  record.document_id = doc.id;
  record.approach = explanation.approach;
  record.k = explanation.k;
  record.gold_label = doc.gold_label;
  record.original_label = explanation.predicted_label;

  MaskedDocument masked;
  if (explanation.top_words.empty()) {
    masked.masked_text = doc.text;
  } else {
    masked = mask_words(doc.text, explanation.top_words);
  }
  record.masked_text = masked.masked_text;
  record.unmatched_words = masked.no_match;

  if (masked.masked_positions.empty()) {
    // Nothing to mask: the explanation cannot change the decision.
    record.filled_text = doc.text;
    record.new_label = record.original_label;
    record.score = 0;
    record.reason = "NoMatch";
    return record;
  }

  const Label target = opposite(record.original_label);
  try {
    Bindings fill_bindings;
    fill_bindings.masked_review = masked.masked_text;
    fill_bindings.classification2 = target;
    const BackendCall fill = BackendCall::make({PromptStep::DcrFillMasks, doc.dataset_kind, record.k},
                                               std::move(fill_bindings));
    record.filled_text = gateway.complete_parsed(fill, &record.calls).text;
    record.mask_violations = validate_mask_only_edits(masked, record.filled_text);

    Bindings reclassify_bindings;
    reclassify_bindings.new_review = record.filled_text;
    const BackendCall reclassify = BackendCall::make(
        {PromptStep::DcrReclassify, doc.dataset_kind, record.k}, std::move(reclassify_bindings));
    record.new_label = gateway.complete_parsed(reclassify, &record.calls).label;
  } catch (const ParseExhausted& e) {
    record.excluded = true;
    record.reason = std::string("DocumentFailed: ") + e.what();
    return record;
  } catch (const TransportError& e) {
    record.excluded = true;
    record.reason = std::string("DocumentFailed: transport: ") + e.what();
    return record;
  }
  record.score = *record.new_label != record.original_label ? 1 : 0;
  return record;
}

DcrSummary dcr(const std::vector<DcrRecord>& records) {
  DcrSummary summary;
  if (!records.empty()) {
    summary.approach = records.front().approach;
    summary.k = records.front().k;
  }
  long score_sum = 0;
  int correct = 0;
  for (const auto& r : records) {
    if (r.original_label == r.gold_label) ++correct;
    if (r.excluded) {
      ++summary.n_excluded;
      continue;
    }
    ++summary.n_scored;
    score_sum += r.score;
    if (!r.mask_violations.empty()) ++summary.n_mask_violations;
  }
  if (summary.n_scored == 0) throw EmptyInput("no scorable decision-changing records");
  summary.dcr = static_cast<double>(score_sum) / summary.n_scored;
  summary.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  return summary;
}

}  // namespace cfx
