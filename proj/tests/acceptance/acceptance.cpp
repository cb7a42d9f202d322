// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Everything runs offline against the lexicon oracle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfexplain/datasets.hpp"
#include "cfexplain/dcr_eval.hpp"
#include "cfexplain/errors.hpp"
#include "cfexplain/lexicon_oracle.hpp"
#include "cfexplain/pipelines.hpp"
#include "cfexplain/prompt_templates.hpp"
#include "cfexplain/reporting.hpp"
#include "cfexplain/text_processing.hpp"
#include "test_support.hpp"

using namespace cfx;
using namespace cfx::testing;

namespace {

// Pinned tolerances and sizes.
constexpr int kCorpusDocs = 200;
constexpr int kLexiconWords = 50;
constexpr double kMaxEquivalenceSeconds = 10.0;
constexpr double kDcrTolerance = 1e-12;
constexpr double kStatsTolerance = 0.01;
constexpr double kTableTolerance = 1e-9;
constexpr int kFuzzedReplies = 1000;
constexpr int kSamplingRuns = 8;
constexpr int kMaskSuiteSize = 50;

constexpr Approach kApproaches[] = {Approach::DP, Approach::CFP, Approach::CFS};

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> check;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const SyntheticWorld& world() {
  static const SyntheticWorld w = make_world(kLexiconWords, 2024);
  return w;
}

const std::vector<Document>& corpus() {
  static const std::vector<Document> docs = make_corpus(world(), kCorpusDocs, 77);
  return docs;
}

// Score the oracle should give: sign of the unmasked sum plus one opposite
// filler per masked token, computed straight from the polarity table.
int analytic_score(const PolarityMap& polarity, double filler, const std::string& text,
                   const std::vector<std::string>& words) {
  const Label original = ref_classify(polarity, text);
  double unmasked = 0.0;
  int masks = 0;
  for (const auto& token : ref_split(text)) {
    const std::string n = ref_normalize(token);
    if (!n.empty() && std::find(words.begin(), words.end(), n) != words.end()) {
      ++masks;
    } else if (auto it = polarity.find(n); it != polarity.end()) {
      unmasked += it->second;
    }
  }
  if (masks == 0) return 0;
  const double filled = unmasked + masks * (original == Label::Positive ? -filler : filler);
  const Label after = filled > 0.0 ? Label::Positive : Label::Negative;
  return after != original ? 1 : 0;
}

// 1 ------------------------------------------------------------------------
Outcome oracle_equivalence() {
  auto gw = make_oracle_gateway(world().lexicon());
  const auto start = std::chrono::steady_clock::now();
  int mismatches = 0;
  int runs = 0;
  for (const Document& doc : corpus()) {
    for (int k = 1; k <= 3; ++k) {
      const auto expected = ref_top_k(world().polarity, doc.text, k);
      for (Approach a : kApproaches) {
        ++runs;
        if (run_approach(a, doc, k, *gw).top_words != expected) ++mismatches;
      }
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mismatches == 0 && seconds < kMaxEquivalenceSeconds,
          format("%d runs, %d mismatches, %.2fs (limit %.0fs)", runs, mismatches, seconds, kMaxEquivalenceSeconds)};
}

// 2 ------------------------------------------------------------------------
Outcome dcr_brute_force() {
  const Lexicon lexicon = world().lexicon();
  auto gw = make_oracle_gateway(lexicon);
  int disagreements = 0;
  int scored = 0;
  double worst = 0.0;
  for (Approach a : kApproaches) {
    for (int k = 1; k <= 3; ++k) {
      std::vector<DcrRecord> records;
      long expected_sum = 0;
      for (const Document& doc : corpus()) {
        const ExplanationResult e = run_approach(a, doc, k, *gw);
        const DcrRecord r = decision_changing_score(doc, e, *gw);
        const int expected = analytic_score(world().polarity, lexicon.filler_magnitude(), doc.text, e.top_words);
        if (r.score != expected || r.excluded) ++disagreements;
        expected_sum += expected;
        records.push_back(r);
        ++scored;
      }
      const double enumerated = static_cast<double>(expected_sum) / static_cast<double>(corpus().size());
      worst = std::max(worst, std::fabs(dcr(records).dcr - enumerated));
    }
  }
  return {disagreements == 0 && worst <= kDcrTolerance,
          format("%d records, %d predictor disagreements, max |dcr - enumerated| = %.3g (tol %.0e)", scored,
                 disagreements, worst, kDcrTolerance)};
}

// 3 ------------------------------------------------------------------------
Outcome fallback_correctness() {
  const Lexicon lexicon = world().lexicon();
  auto gw = make_gateway(non_flipping_oracle(lexicon));
  int word_mismatch = 0;
  int no_fallback = 0;
  std::map<std::uint64_t, int> cfp_calls;
  std::map<std::uint64_t, int> cfs_calls;
  for (const Document& doc : corpus()) {
    for (int k = 1; k <= 3; ++k) {
      const ExplanationResult dp = run_dp(doc, k, *gw);
      const ExplanationResult cfp = run_cfp(doc, k, *gw);
      const ExplanationResult cfs = run_cfs(doc, k, *gw);
      if (cfp.top_words != dp.top_words) ++word_mismatch;
      if (!cfp.fallback_used || !cfs.fallback_used) ++no_fallback;
      ++cfp_calls[cfp.calls.calls_made];
      ++cfs_calls[cfs.calls.calls_made];
    }
  }
  const auto histogram = [](const std::map<std::uint64_t, int>& h) {
    std::ostringstream s;
    for (const auto& [calls, n] : h) s << (s.tellp() ? "," : "") << calls << "x" << n;
    return s.str();
  };
  const bool counts_ok = cfp_calls.size() == 1 && cfp_calls.count(5) && cfs_calls.size() == 1 && cfs_calls.count(4);
  return {word_mismatch == 0 && no_fallback == 0 && counts_ok,
          format("word mismatches %d, missing fallbacks %d, CFP calls {%s} (expected 5), CFS calls {%s} (expected 4)",
                 word_mismatch, no_fallback, histogram(cfp_calls).c_str(), histogram(cfs_calls).c_str())};
}

// 4 ------------------------------------------------------------------------
Outcome monotone_k() {
  SyntheticOptions options;
  options.same_sign = true;
  options.max_sentiment_words = 5;
  const std::vector<Document> docs = make_corpus(world(), kCorpusDocs, 91, options);
  auto gw = make_oracle_gateway(world().lexicon());
  std::ostringstream detail;
  bool ok = true;
  for (Approach a : kApproaches) {
    double previous = -1.0;
    detail << (a == Approach::DP ? "" : "; ") << to_string(a);
    for (int k = 1; k <= 3; ++k) {
      std::vector<DcrRecord> records;
      for (const Document& doc : docs) records.push_back(decision_changing_score(doc, run_approach(a, doc, k, *gw), *gw));
      const double value = dcr(records).dcr;
      if (value < previous) ok = false;
      previous = value;
      detail << format(" %.3f", value);
    }
  }
  return {ok, "DCR_1..3 per approach:" + detail.str().substr(0)};
}

// 5 ------------------------------------------------------------------------
struct GoldenCase {
  PromptStep step;
  const char* file;
};

Outcome parser_fidelity() {
  static const GoldenCase kGolden[] = {
      {PromptStep::DpTopK, "dp_topk"},
      {PromptStep::ClassifyOnly, "classify_only"},
      {PromptStep::MakeCounterfactual, "make_counterfactual_cfp"},
      {PromptStep::MakeCounterfactual, "make_counterfactual_cfs"},
      {PromptStep::ClassifyCounterfactual, "classify_counterfactual"},
      {PromptStep::CfpTopKFromPair, "cfp_topk_from_pair"},
      {PromptStep::CfsRefine, "cfs_refine"},
      {PromptStep::DcrFillMasks, "dcr_fill_masks"},
      {PromptStep::DcrReclassify, "dcr_reclassify"},
  };
  const auto replace_all = [](std::string s, const std::string& from, const std::string& to) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
    return s;
  };
  int golden_ok = 0;
  int golden_total = 0;
  for (DatasetKind dataset : {DatasetKind::Amazon, DatasetKind::Sst2, DatasetKind::Imdb}) {
    for (const auto& c : kGolden) {
      ++golden_total;
      const std::string golden =
          read_file(tests_dir() / "golden" / std::string(to_string(dataset)) / (std::string(c.file) + ".txt"));
      Bindings b;
      b.review = "{review}";
      b.counterfactual = "{counterfactual}";
      b.masked_review = "{masked review}";
      b.new_review = "{new review}";
      b.classification1 = Label::Negative;
      b.classification2 = Label::Positive;
      b.prior_words = std::vector<std::string>{"DP word1", "DP word2", "DP word3"};
      const std::string expected =
          replace_all(replace_all(golden, "{classification1}", "negative"), "{classification2}", "positive");
      if (!golden.empty() && render({c.step, dataset, 3}, b) == expected) ++golden_ok;
    }
  }

  static const PromptStep kSteps[] = {PromptStep::DpTopK,          PromptStep::ClassifyOnly,
                                      PromptStep::MakeCounterfactual, PromptStep::ClassifyCounterfactual,
                                      PromptStep::CfpTopKFromPair, PromptStep::CfsRefine,
                                      PromptStep::DcrFillMasks,    PromptStep::DcrReclassify};
  const LexiconOracle oracle(world().lexicon(), 5);
  std::mt19937_64 rng(555);
  const std::vector<Document> docs = make_corpus(world(), 250, 556);
  int rejects = 0;
  int content_mismatches = 0;
  for (int i = 0; i < kFuzzedReplies; ++i) {
    const Document& doc = docs[rng() % docs.size()];
    const PromptStep step = kSteps[rng() % std::size(kSteps)];
    const DatasetKind dataset = static_cast<DatasetKind>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % 5);
    const double temperature = rng() % 2 ? 0.0 : 0.25 * static_cast<double>(1 + rng() % 8);
    const Label target = rng() % 2 ? Label::Positive : Label::Negative;
    Bindings b;
    b.review = doc.text;
    b.counterfactual = oracle.counterfactual(doc.text).text;
    b.new_review = doc.text;
    b.classification1 = oracle.classify(doc.text);
    b.classification2 = target;
    b.prior_words = ref_top_k(world().polarity, doc.text, k);
    const auto words = ref_top_k(world().polarity, doc.text, k);
    b.masked_review = words.empty() ? doc.text : mask_words(doc.text, words).masked_text;
    BackendCall call = BackendCall::make({step, dataset, k}, b);
    call.sample_stream = rng();
    const std::string reply = oracle.answer(call, temperature);
    ParsedReply parsed;
    try {
      parsed = parse_reply(call, reply);
    } catch (const ParseError&) {
      ++rejects;
      continue;
    }
    if (temperature != 0.0) continue;
    bool same = true;
    switch (call.kind) {
      case CallKind::Classify:
        same = parsed.label == ref_classify(world().polarity, std::string(subject_text(call)));
        break;
      case CallKind::TopKWithClass:
        same = parsed.label == ref_classify(world().polarity, doc.text) && parsed.words == words;
        break;
      case CallKind::TopKFromPair:
      case CallKind::RefineTopK:
        same = parsed.words == words;
        break;
      case CallKind::MakeCounterfactual:
        same = parsed.text == oracle.counterfactual(doc.text).text;
        break;
      case CallKind::FillMasks:
        same = parsed.text == oracle.fill_masks(*b.masked_review, target);
        break;
    }
    if (!same) ++content_mismatches;
  }
  return {golden_ok == 27 && golden_total == 27 && rejects == 0 && content_mismatches == 0,
          format("golden %d/%d verbatim, %d fuzzed replies: %d rejects, %d content mismatches", golden_ok, golden_total,
                 kFuzzedReplies, rejects, content_mismatches)};
}

// 6 ------------------------------------------------------------------------
Outcome statistics_reproduction() {
  struct Case {
    const char* file;
    DatasetKind kind;
    double avg;
    std::map<int, double> published;
  };
  const Case cases[] = {
      {"stats_amazon.tsv", DatasetKind::Amazon, 10.86, {{1, 9.21}, {2, 18.42}, {3, 27.62}}},
      {"stats_sst2.tsv", DatasetKind::Sst2, 17.76, {{1, 5.63}, {2, 11.26}, {3, 16.89}}},
      {"stats_imdb.tsv", DatasetKind::Imdb, 213.28, {{3, 1.41}, {5, 2.34}}},
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Case& c : cases) {
    const Corpus loaded = load_corpus(tests_dir() / "fixtures" / c.file, c.kind);
    std::vector<int> ks;
    for (const auto& [k, _] : c.published) ks.push_back(k);
    const DatasetStats s = stats(loaded.documents, ks);
    if (std::fabs(s.avg_words - c.avg) > 1e-9) ok = false;
    detail << (detail.tellp() ? "; " : "") << to_string(c.kind) << format(" avg %.2f:", s.avg_words);
    for (const auto& [k, expected] : c.published) {
      const double got = s.k_proportions.at(k);
      if (std::fabs(got - expected) > kStatsTolerance) ok = false;
      detail << format(" k%d=%.2f%%", k, got);
    }
  }
  return {ok, detail.str()};
}

// 7 ------------------------------------------------------------------------
Outcome table_replay() {
  const ResultsTable table = build_table(load_runs(tests_dir() / "fixtures" / "table1_runs.jsonl"));
  const TableRow* cfp_l3 = table.find(Approach::CFP, "L3");
  bool row_ok = cfp_l3 != nullptr;
  if (row_ok) {
    const double expected[] = {0.82, 0.92, 0.96};
    for (int k = 1; k <= 3; ++k) {
      const auto it = cfp_l3->dcr.find({DatasetKind::Amazon, k});
      if (it == cfp_l3->dcr.end() || std::fabs(it->second - expected[k - 1]) > kTableTolerance) row_ok = false;
    }
  }

  // Highlighted cells of the published table.
  using Cell = std::tuple<std::string, Approach, DatasetKind, int>;
  const std::set<Cell> highlighted = {
      {"L3", Approach::CFP, DatasetKind::Amazon, 1}, {"L3", Approach::CFP, DatasetKind::Amazon, 2},
      {"L3", Approach::CFP, DatasetKind::Amazon, 3}, {"L3", Approach::DP, DatasetKind::Amazon, 1},
      {"L3", Approach::DP, DatasetKind::Amazon, 3},  {"L3", Approach::CFP, DatasetKind::Sst2, 1},
      {"L3", Approach::CFP, DatasetKind::Sst2, 2},   {"L3", Approach::CFS, DatasetKind::Sst2, 1},
      {"L3", Approach::CFS, DatasetKind::Sst2, 3},   {"L3", Approach::CFS, DatasetKind::Imdb, 3},
      {"L3", Approach::CFS, DatasetKind::Imdb, 5},   {"G4", Approach::CFP, DatasetKind::Amazon, 1},
      {"G4", Approach::CFP, DatasetKind::Amazon, 2}, {"G4", Approach::CFP, DatasetKind::Amazon, 3},
      {"G4", Approach::CFS, DatasetKind::Amazon, 3}, {"G4", Approach::DP, DatasetKind::Amazon, 1},
      {"G4", Approach::DP, DatasetKind::Amazon, 3},  {"G4", Approach::CFP, DatasetKind::Sst2, 1},
      {"G4", Approach::CFS, DatasetKind::Sst2, 2},   {"G4", Approach::CFS, DatasetKind::Sst2, 3},
      {"G4", Approach::CFP, DatasetKind::Imdb, 3},   {"G4", Approach::CFP, DatasetKind::Imdb, 5},
      {"G4", Approach::CFS, DatasetKind::Imdb, 3},
  };
  std::set<Cell> marked;
  for (const TableRow& row : table.rows) {
    for (const CellKey& cell : row.best) marked.insert({row.backend, row.approach, cell.dataset, cell.k});
  }
  const bool text_ok = table.to_text().find("CFP-L3    | 98%     0.82*   0.92*   0.96*") != std::string::npos;
  return {row_ok && marked == highlighted && text_ok,
          format("CFP-L3 amazon row %s, %zu/%zu highlighted cells marked, %zu extra", row_ok ? "0.82/0.92/0.96" : "WRONG",
                 static_cast<std::size_t>(std::count_if(highlighted.begin(), highlighted.end(),
                                                        [&](const Cell& c) { return marked.count(c) > 0; })),
                 highlighted.size(),
                 static_cast<std::size_t>(std::count_if(marked.begin(), marked.end(),
                                                        [&](const Cell& c) { return highlighted.count(c) == 0; })))};
}

// 8 ------------------------------------------------------------------------
// Documents with one or two dominant words and several equal-magnitude
// competitors, so that a word outside the stable set is rarely chosen by
// every run.
struct SamplingDoc {
  Document doc;
  int k;
};

Outcome weight_vector_properties() {
  std::unordered_map<std::string, double> polarity = {{"superb", 10}, {"dreadful", -10}, {"stellar", 8},
                                                      {"abysmal", -8}};
  std::unordered_map<std::string, std::string> antonyms = {
      {"superb", "dreadful"}, {"dreadful", "superb"}, {"stellar", "abysmal"}, {"abysmal", "stellar"}};
  for (int i = 0; i < 6; ++i) {
    polarity["up" + std::to_string(i)] = 1.0;
    polarity["down" + std::to_string(i)] = -1.0;
    antonyms["up" + std::to_string(i)] = "down" + std::to_string(i);
    antonyms["down" + std::to_string(i)] = "up" + std::to_string(i);
  }
  const Lexicon lexicon = Lexicon::create(polarity, antonyms, "superb", "dreadful");

  std::mt19937_64 rng(808);
  std::vector<SamplingDoc> docs;
  for (int d = 0; d < 40; ++d) {
    const bool positive = d % 2 == 0;
    std::vector<std::string> words = {"the", "film", "was", "and", "then", "it"};
    const int anchors = 1 + d % 2;
    words.push_back(positive ? "superb" : "dreadful");
    if (anchors == 2) words.push_back(positive ? "stellar" : "abysmal");
    const int competitors = 4 + static_cast<int>(rng() % 3);
    for (int i = 0; i < competitors; ++i) words.push_back((positive ? "up" : "down") + std::to_string(i));
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    docs.push_back({make_doc(text, positive ? Label::Positive : Label::Negative, DatasetKind::Amazon,
                             std::to_string(d + 1)),
                    anchors + 1});
  }

  const auto stable_words = [&](const std::string& text, int k) {
    std::set<std::string> present;
    for (const auto& t : ref_split(text)) {
      const std::string n = ref_normalize(t);
      if (polarity.count(n)) present.insert(n);
    }
    std::set<std::string> stable;
    for (const auto& w : present) {
      int threats = 0;
      for (const auto& j : present) {
        if (j != w && 3.0 * std::fabs(polarity.at(j)) > std::fabs(polarity.at(w))) ++threats;
      }
      if (threats < k) stable.insert(w);
    }
    return stable;
  };

  int not_multiple = 0;
  int out_of_range = 0;
  int stable_missed = 0;
  int unstable_full = 0;
  int nondeterministic = 0;
  int vectors = 0;
  for (Approach a : {Approach::CFP, Approach::CFS}) {
    for (const SamplingDoc& sd : docs) {
      auto gw = make_oracle_gateway(lexicon, 1.0, 4242);
      auto again = make_oracle_gateway(lexicon, 1.0, 4242);
      const WeightVector w = run_sampled(sd.doc, sd.k, kSamplingRuns, a, *gw);
      const WeightVector w2 = run_sampled(sd.doc, sd.k, kSamplingRuns, a, *again);
      ++vectors;
      if (w.weights.size() != w2.weights.size() ||
          std::memcmp(w.weights.data(), w2.weights.data(), w.weights.size() * sizeof(double)) != 0)
        ++nondeterministic;
      const std::set<std::string> stable = stable_words(sd.doc.text, sd.k);
      const auto tokens = ref_split(sd.doc.text);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const double x = w.weights[i];
        if (x < 0.0 || x > 1.0) ++out_of_range;
        if (x * kSamplingRuns != std::round(x * kSamplingRuns)) ++not_multiple;
        const bool is_stable = stable.count(ref_normalize(tokens[i])) > 0;
        if (is_stable && x != 1.0) ++stable_missed;
        if (!is_stable && x == 1.0) ++unstable_full;
      }
    }
  }
  return {not_multiple + out_of_range + stable_missed + unstable_full + nondeterministic == 0,
          format("%d vectors (n=%d, t=1): %d off-grid, %d out of range, %d stable below 1.0, %d unstable at 1.0, "
                 "%d non-repeatable",
                 vectors, kSamplingRuns, not_multiple, out_of_range, stable_missed, unstable_full, nondeterministic)};
}

// 9 ------------------------------------------------------------------------
Outcome mask_integrity() {
  const LexiconOracle oracle(world().lexicon());
  std::mt19937_64 rng(99);
  const std::vector<std::string> fillers = {"wonderful", "dull", "so-so", "not bad", "truly great", "meh"};
  std::vector<std::pair<MaskedDocument, std::string>> clean;
  std::vector<std::pair<MaskedDocument, std::string>> edited;
  for (const Document& doc : make_corpus(world(), 400, 100)) {
    if (static_cast<int>(clean.size()) == kMaskSuiteSize && static_cast<int>(edited.size()) == kMaskSuiteSize) break;
    const auto words = ref_top_k(world().polarity, doc.text, 2);
    if (words.empty()) continue;
    const MaskedDocument m = mask_words(doc.text, words);
    const std::string& masked = m.masked_text;
    const std::size_t first = masked.find(kMaskToken);
    const std::size_t last = masked.rfind(kMaskToken);
    const std::string prefix = masked.substr(0, first);
    const std::string suffix = masked.substr(last + kMaskToken.size());

    // Mask-only fill: every mask replaced by a non-empty phrase.
    std::string fill;
    std::size_t pos = 0;
    for (std::size_t hit = masked.find(kMaskToken); hit != std::string::npos; hit = masked.find(kMaskToken, pos)) {
      fill += masked.substr(pos, hit - pos) + fillers[rng() % fillers.size()];
      pos = hit + kMaskToken.size();
    }
    fill += masked.substr(pos);
    if (static_cast<int>(clean.size()) < kMaskSuiteSize) {
      clean.push_back({m, clean.size() % 2 ? fill : oracle.fill_masks(masked, Label::Negative)});
    }

    // Off-mask edit inside the anchored prefix or suffix literal.
    if (static_cast<int>(edited.size()) < kMaskSuiteSize && (!prefix.empty() || !suffix.empty())) {
      std::string bad = fill;
      switch (edited.size() % 3) {
        case 0:
          if (prefix.empty()) continue;
          bad[0] = bad[0] == 'Q' ? 'Z' : 'Q';
          break;
        case 1:
          if (prefix.empty()) continue;
          bad.erase(0, 1);
          break;
        default:
          if (suffix.empty()) continue;
          bad.back() = bad.back() == '?' ? ';' : '?';
          break;
      }
      edited.push_back({m, bad});
    }
  }
  int flagged_edited = 0;
  int flagged_clean = 0;
  for (const auto& [m, f] : edited) flagged_edited += !validate_mask_only_edits(m, f).empty();
  for (const auto& [m, f] : clean) flagged_clean += !validate_mask_only_edits(m, f).empty();
  const bool sizes = static_cast<int>(edited.size()) == kMaskSuiteSize && static_cast<int>(clean.size()) == kMaskSuiteSize;
  return {sizes && flagged_edited == kMaskSuiteSize && flagged_clean == 0,
          format("off-mask fills flagged %d/%zu, mask-only fills flagged %d/%zu", flagged_edited, edited.size(),
                 flagged_clean, clean.size())};
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "oracle end-to-end equivalence", oracle_equivalence},
      {2, "DCR brute-force equivalence", dcr_brute_force},
      {3, "fallback correctness", fallback_correctness},
      {4, "monotone k", monotone_k},
      {5, "parser and format fidelity", parser_fidelity},
      {6, "statistics reproduction", statistics_reproduction},
      {7, "table replay", table_replay},
      {8, "weight-vector properties", weight_vector_properties},
      {9, "mask integrity", mask_integrity},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.number << "] " << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (9 - failures) << "/9 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
