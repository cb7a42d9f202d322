#include "cfexplain/text_processing.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace cfx {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

// [begin, end) of the token core once edge punctuation is removed.
std::pair<std::size_t, std::size_t> core_range(std::string_view surface) {
  std::size_t begin = 0;
  std::size_t end = surface.size();
  while (begin < end && is_punct(surface[begin])) ++begin;
  while (end > begin && is_punct(surface[end - 1])) --end;
  return {begin, end};
}

// Splits "word   word2 " into ["word   ", "word2 "] for word-granular trimming.
std::vector<std::string_view> word_chunks(std::string_view s) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    while (i < s.size() && is_space(s[i])) ++i;
    chunks.push_back(s.substr(start, i - start));
  }
  return chunks;
}

MaskViolation trimmed_violation(std::size_t index, std::string_view expected,
                                std::string_view actual) {
  auto e = word_chunks(expected);
  auto a = word_chunks(actual);
  std::size_t front = 0;
  while (front < e.size() && front < a.size() && e[front] == a[front]) ++front;
  std::size_t back = 0;
  while (back < e.size() - front && back < a.size() - front &&
         e[e.size() - 1 - back] == a[a.size() - 1 - back]) {
    ++back;
  }
  auto join = [](const std::vector<std::string_view>& parts, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) out += parts[i];
    return out;
  };
  std::string exp = join(e, front, e.size() - back);
  std::string act = join(a, front, a.size() - back);
  if (exp.empty() && act.empty()) {
    // Differences only in whitespace runs inside a chunk; report whole segment.
    return {index, std::string(expected), std::string(actual)};
  }
  return {index, std::move(exp), std::move(act)};
}

std::vector<std::string_view> split_literals(std::string_view masked) {
  std::vector<std::string_view> literals;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = masked.find(kMaskToken, pos);
    if (hit == std::string_view::npos) {
      literals.push_back(masked.substr(pos));
      break;
    }
    literals.push_back(masked.substr(pos, hit - pos));
    pos = hit + kMaskToken.size();
  }
  return literals;
}

// Glob-style match where every mask consumes at least one byte. Leftmost
// placement of each interior literal is optimal for this pattern class.
bool exact_mask_match(const std::vector<std::string_view>& literals, std::string_view filled) {
  if (literals.size() == 1) return filled == literals[0];
  const std::string_view head = literals.front();
  const std::string_view tail = literals.back();
  if (filled.size() < head.size() + tail.size() + (literals.size() - 1)) return false;
  if (filled.substr(0, head.size()) != head) return false;
  if (filled.substr(filled.size() - tail.size()) != tail) return false;
  const std::size_t limit = filled.size() - tail.size();
  std::size_t pos = head.size();
  for (std::size_t i = 1; i + 1 < literals.size(); ++i) {
    const std::size_t hit = filled.find(literals[i], pos + 1);
    if (hit == std::string_view::npos || hit + literals[i].size() > limit) return false;
    pos = hit + literals[i].size();
  }
  // The final mask needs at least one byte before the tail.
  return pos < limit;
}

// Above this many DP cells the diagnostic falls back to a whole-text report.
constexpr std::size_t kMaxAlignmentCells = 64u * 1024u * 1024u;

std::vector<MaskViolation> diagnose(const std::vector<std::string_view>& literals,
                                    std::string_view masked, std::string_view filled) {
  // Pattern items: literal bytes, or -1 for a mask wildcard.
  std::vector<int> items;
  for (std::size_t s = 0; s < literals.size(); ++s) {
    for (char c : literals[s]) items.push_back(static_cast<unsigned char>(c));
    if (s + 1 < literals.size()) items.push_back(-1);
  }
  const std::size_t rows = items.size() + 1;
  const std::size_t cols = filled.size() + 1;
  if (rows * cols > kMaxAlignmentCells) {
    return {{0, std::string(masked), std::string(filled)}};
  }

  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  std::vector<int> dp(rows * cols, kInf);
  auto at = [&](std::size_t i, std::size_t j) -> int& { return dp[i * cols + j]; };
  for (std::size_t j = 0; j < cols; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i < rows; ++i) {
    const int item = items[i - 1];
    if (item < 0) {
      int best_prefix = kInf;  // min over dp[i-1][0..j-1]
      for (std::size_t j = 0; j < cols; ++j) {
        int v = at(i - 1, j) + 1;  // mask dropped entirely
        v = std::min(v, best_prefix);
        at(i, j) = v;
        best_prefix = std::min(best_prefix, at(i - 1, j));
      }
    } else {
      at(i, 0) = at(i - 1, 0) + 1;
      for (std::size_t j = 1; j < cols; ++j) {
        const int sub = at(i - 1, j - 1) +
                        (item == static_cast<unsigned char>(filled[j - 1]) ? 0 : 1);
        at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
      }
    }
  }

  // Trace back and record where each mask sits in `filled`.
  const std::size_t masks = literals.size() - 1;
  std::vector<std::size_t> mask_begin(masks, 0);
  std::vector<std::size_t> mask_end(masks, 0);
  std::size_t mask_index = masks;
  std::size_t i = rows - 1;
  std::size_t j = cols - 1;
  while (i > 0) {
    const int item = items[i - 1];
    const int here = at(i, j);
    if (item < 0) {
      --mask_index;
      mask_end[mask_index] = j;
      // Prefer a non-empty fill; fall back to "mask dropped".
      std::size_t from = j;
      bool absorbed = false;
      while (from > 0) {
        --from;
        if (at(i - 1, from) == here) {
          absorbed = true;
          break;
        }
      }
      mask_begin[mask_index] = absorbed ? from : j;
      j = mask_begin[mask_index];
      --i;
      continue;
    }
    if (j > 0 &&
        here == at(i - 1, j - 1) + (item == static_cast<unsigned char>(filled[j - 1]) ? 0 : 1)) {
      --i;
      --j;
    } else if (here == at(i - 1, j) + 1) {
      --i;
    } else {
      --j;
    }
  }

  std::vector<MaskViolation> violations;
  for (std::size_t s = 0; s < literals.size(); ++s) {
    const std::size_t begin = s == 0 ? 0 : mask_end[s - 1];
    // Leading insertions before the first pattern item belong to segment 0.
    const std::size_t end = s == masks ? filled.size() : mask_begin[s];
    const std::string_view actual = filled.substr(begin, end - begin);
    if (actual != literals[s]) violations.push_back(trimmed_violation(s, literals[s], actual));
  }
  for (std::size_t m = 0; m < masks; ++m) {
    if (mask_begin[m] == mask_end[m]) {
      violations.push_back({m + 1, std::string(kMaskToken), ""});
    }
  }
  if (violations.empty()) {
    // Alignment found only whitespace-level noise the segment view cannot see.
    violations.push_back({0, std::string(masked), std::string(filled)});
  }
  return violations;
}

}  // namespace

std::string TokenizedText::reconstruct() const {
  std::string out;
  std::size_t cursor = 0;
  for (const Token& t : tokens) {
    out.append(original, cursor, t.offset - cursor);
    out += t.surface;
    // The surface may have been rewritten; skip the original token instead.
    cursor = t.offset;
    while (cursor < original.size() && !is_space(original[cursor]))
      ++cursor;
  }
  if (cursor < original.size()) out.append(original, cursor, std::string::npos);
  return out;
}

std::string normalize_word(std::string_view word) {
  const auto [begin, end] = core_range(word);
  std::string out(word.substr(begin, end - begin));
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

TokenizedText tokenize(std::string_view text) {
  TokenizedText result;
  result.original = std::string(text);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    const std::string_view surface = text.substr(start, i - start);
    result.tokens.push_back({std::string(surface), start, normalize_word(surface)});
  }
  return result;
}

std::string replace_word_core(std::string_view surface, std::string_view replacement) {
  const auto [begin, end] = core_range(surface);
  std::string out(surface.substr(0, begin));
  out += replacement;
  out += surface.substr(end);
  return out;
}

bool is_matchable(const Token& token) {
  return !token.normalized.empty() && token.surface.find(kMaskToken) == std::string::npos;
}

MaskedDocument mask_words(std::string_view text, const std::vector<std::string>& words) {
  if (words.empty()) throw std::invalid_argument("mask_words: word list is empty");

  TokenizedText tokenized = tokenize(text);
  std::vector<std::string> targets;
  for (const auto& w : words) targets.push_back(normalize_word(w));

  MaskedDocument out;
  std::vector<bool> matched(words.size(), false);
  for (std::size_t t = 0; t < tokenized.tokens.size(); ++t) {
    Token& token = tokenized.tokens[t];
    if (!is_matchable(token)) continue;
    bool hit = false;
    for (std::size_t w = 0; w < targets.size(); ++w) {
      if (!targets[w].empty() && targets[w] == token.normalized) {
        matched[w] = true;
        hit = true;
      }
    }
    if (!hit) continue;
    token.surface = replace_word_core(token.surface, kMaskToken);
    out.masked_positions.push_back(t);
  }

  std::unordered_set<std::string> seen;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (!seen.insert(targets[w]).second) continue;
    (matched[w] ? out.words_masked : out.no_match).push_back(words[w]);
  }
  out.masked_text = tokenized.reconstruct();
  return out;
}

std::vector<MaskViolation> validate_mask_only_edits(std::string_view masked_text,
                                                    std::string_view filled) {
  const auto literals = split_literals(masked_text);
  if (exact_mask_match(literals, filled)) return {};
  return diagnose(literals, masked_text, filled);
}

bool word_in_text(const TokenizedText& tokenized, std::string_view word) {
  const std::string target = normalize_word(word);
  if (target.empty()) return false;
  return std::any_of(tokenized.tokens.begin(), tokenized.tokens.end(), [&](const Token& t) {
    return is_matchable(t) && t.normalized == target;
  });
}

}  // namespace cfx
