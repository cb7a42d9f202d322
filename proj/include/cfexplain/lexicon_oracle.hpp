#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/types.hpp"

namespace cfx {

/// Word-polarity table plus antonyms and the two mask fillers.
///
/// Invariants (checked by create()):
///   * antonym pairs have opposite-sign polarity and map back to each other;
///   * both fillers are present with |polarity| equal to the same F > 0,
///     the positive filler positive and the negative filler negative.
class Lexicon {
 public:
  static Lexicon create(std::unordered_map<std::string, double> polarity,
                        std::unordered_map<std::string, std::string> antonyms,
                        std::string positive_filler, std::string negative_filler);

  /// Plain-text format, one entry per line:
  ///   word<TAB>weight[<TAB>antonym]
  /// Header lines declare fillers:
  ///   !positive_filler<TAB>word
  ///   !negative_filler<TAB>word
  /// Blank lines and lines starting with '#' are ignored.
  static Lexicon load(const std::filesystem::path& path);
  static Lexicon parse(std::string_view content);

  std::optional<double> polarity(std::string_view normalized_word) const;
  std::optional<std::string> antonym(std::string_view normalized_word) const;
  const std::string& positive_filler() const { return positive_filler_; }
  const std::string& negative_filler() const { return negative_filler_; }
  const std::string& filler(Label target) const {
    return target == Label::Positive ? positive_filler_ : negative_filler_;
  }
  double filler_magnitude() const { return filler_magnitude_; }
  const std::unordered_map<std::string, double>& entries() const { return polarity_; }

 private:
  std::unordered_map<std::string, double> polarity_;
  std::unordered_map<std::string, std::string> antonyms_;
  std::string positive_filler_;
  std::string negative_filler_;
  double filler_magnitude_ = 0.0;
};

struct CounterfactualEdit {
  std::string text;
  bool flipped = false;
  int swaps = 0;
};

/// Deterministic stand-in for the black-box classifier. All operations are
/// pure functions of their inputs; the jittered top_k takes an explicit
/// generator so callers control reproducibility.
class LexiconOracle : public Backend {
 public:
  explicit LexiconOracle(Lexicon lexicon, std::uint64_t seed = 0);

  // Sum of known-word polarities. Zero sum is negative.
  double polarity_sum(std::string_view text) const;
  Label classify(std::string_view text) const;

  // Distinct in-lexicon words ranked by |polarity|, earliest occurrence
  // first on ties. Returned in normalized form.
  std::vector<std::string> top_k(std::string_view text, int k) const;
  // Same, with every |polarity| scaled by U[1 - t/2, 1 + t/2].
  std::vector<std::string> top_k(std::string_view text, int k, double temperature,
                                 std::mt19937_64& rng) const;

  /// Greedy antonym swaps in descending |polarity| order until the label flips.
  CounterfactualEdit counterfactual(std::string_view text) const;

  std::string fill_masks(std::string_view masked_text, Label target) const;

  /// Renders the answer to `call` in the reply format its parser expects.
  std::string answer(const BackendCall& call, double temperature) const;
  std::string send(const BackendCall& call, const BackendConfig& config) override;

  const Lexicon& lexicon() const { return lexicon_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 call_rng(const BackendCall& call) const;

  Lexicon lexicon_;
  std::uint64_t seed_;
};

/// The text a call is "about": the review, counterfactual or filled review.
std::string_view subject_text(const BackendCall& call);

}  // namespace cfx
