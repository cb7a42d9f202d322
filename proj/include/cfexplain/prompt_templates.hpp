#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfexplain/types.hpp"

namespace cfx {

enum class PromptStep {
  DpTopK,
  ClassifyOnly,
  MakeCounterfactual,
  ClassifyCounterfactual,
  CfpTopKFromPair,
  CfsRefine,
  DcrFillMasks,
  DcrReclassify,
};

std::string_view to_string(PromptStep step);

struct TemplateId {
  PromptStep step = PromptStep::DpTopK;
  DatasetKind dataset = DatasetKind::Amazon;
  int k = 3;
};

// Values substituted into template slots. Only the slots a template actually
// uses have to be populated.
struct Bindings {
  std::optional<std::string> review;
  std::optional<std::string> counterfactual;
  std::optional<std::string> masked_review;
  std::optional<std::string> new_review;
  std::optional<Label> classification1;
  // For DcrFillMasks this is the target sentiment of the fill.
  std::optional<Label> classification2;
  std::optional<std::vector<std::string>> prior_words;
};

/// Raw template text with {slot} placeholders, embedded at build time.
std::string_view template_text(PromptStep step, DatasetKind dataset);

/// Fills every known slot of the template. `{MASK}` and other unknown braces
/// are literal text. Throws MissingBinding when a used slot is unset and
/// std::invalid_argument when k < 1.
std::string render(const TemplateId& id, const Bindings& bindings);

// ---------------------------------------------------------------------------
// Reply parsing

enum class ParseWarning { ShortList, TruncatedList };

std::string_view to_string(ParseWarning warning);

struct ClassWords {
  Label label = Label::Negative;
  std::vector<std::string> words;
  std::vector<ParseWarning> warnings;
};

struct WordList {
  std::vector<std::string> words;
  std::vector<ParseWarning> warnings;
};

/// Content of the first <new>...</new> span, trimmed. Throws ParseError
/// (NoTagFound / UnbalancedTags).
std::string parse_tagged(std::string_view reply);

/// "positive"/"negative", case-insensitive, one trailing period allowed.
/// Throws ParseError(BadLabel).
Label parse_label(std::string_view text);

/// "<label,w1,...,wk>" or the long-review form "<new>label,w1,...,wk</new>".
ClassWords parse_class_words(std::string_view reply, int k);

/// "[w1,...,wk]".
WordList parse_word_list(std::string_view reply, int k);

/// Free-text reply: tagged for the short-review corpora. The long-review
/// prompts ask for the bare review, so an untagged reply is taken verbatim.
std::string parse_text_reply(std::string_view reply, DatasetKind dataset);

/// The k-slot list used in output-format instructions: "word1,...,wordk".
std::string word_slots(int k);

/// "[a,b,c]" rendering used for prior-word lists and list replies.
std::string format_word_list(const std::vector<std::string>& words);

/// "<label,a,b>" or "<new>label,a,b</new>" depending on corpus.
std::string format_class_words(Label label, const std::vector<std::string>& words,
                               DatasetKind dataset);

std::string trim(std::string_view s);

}  // namespace cfx
