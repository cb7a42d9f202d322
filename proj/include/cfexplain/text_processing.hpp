#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cfx {

inline constexpr std::string_view kMaskToken = "{MASK}";

struct Token {
  std::string surface;
  std::size_t offset = 0;
  // Lowercased surface with leading/trailing punctuation removed. Empty for
  // pure-punctuation tokens, which never participate in matching.
  std::string normalized;
};

struct TokenizedText {
  std::string original;
  std::vector<Token> tokens;

  // Rebuilds the text from token surfaces and the original inter-token gaps.
  std::string reconstruct() const;
};

/// Whitespace tokenization. Offsets are byte offsets into `text`.
TokenizedText tokenize(std::string_view text);

/// Lowercase + strip leading/trailing ASCII punctuation.
std::string normalize_word(std::string_view word);

/// Swaps the word core of a token surface, keeping edge punctuation:
/// ("good,", "bad") -> "bad,".
std::string replace_word_core(std::string_view surface, std::string_view replacement);

/// Tokens that already carry a {MASK} never match a word.
bool is_matchable(const Token& token);

struct MaskedDocument {
  std::string masked_text;
  std::vector<std::size_t> masked_positions;  // token indices, ascending
  std::vector<std::string> words_masked;      // the requested words that matched
  std::vector<std::string> no_match;          // requested words that matched nothing
};

/// Replaces every token whose normalized form equals the normalized form of
/// any requested word with {MASK}; surrounding punctuation stays outside the
/// mask. Throws std::invalid_argument when `words` is empty.
MaskedDocument mask_words(std::string_view text, const std::vector<std::string>& words);

struct MaskViolation {
  std::size_t segment_index = 0;  // literal segment between masks
  std::string expected;
  std::string actual;

  bool operator==(const MaskViolation&) const = default;
};

/// Checks that `filled` is obtainable from `masked_text` by substituting each
/// {MASK} with a non-empty string. Returns the literal segments that differ;
/// empty iff the fill touched nothing but masks.
std::vector<MaskViolation> validate_mask_only_edits(std::string_view masked_text,
                                                    std::string_view filled);

inline std::vector<MaskViolation> validate_mask_only_edits(const MaskedDocument& masked,
                                                           std::string_view filled) {
  return validate_mask_only_edits(masked.masked_text, filled);
}

/// True when some token of `tokenized` matches `word` under mask_words rules.
bool word_in_text(const TokenizedText& tokenized, std::string_view word);

}  // namespace cfx
