#include "cfexplain/prompt_templates.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "cfexplain/errors.hpp"

namespace cfx {

namespace {

const std::map<std::string_view, std::string_view>& embedded_templates() {
  static const std::map<std::string_view, std::string_view> table = {
#include "templates_embedded.inc"
  };
  return table;
}

std::string_view step_file(PromptStep step) {
  switch (step) {
    case PromptStep::DpTopK: return "dp_topk";
    case PromptStep::ClassifyOnly: return "classify_only";
    case PromptStep::MakeCounterfactual: return "make_counterfactual";
    case PromptStep::ClassifyCounterfactual: return "classify_counterfactual";
    case PromptStep::CfpTopKFromPair: return "cfp_topk_from_pair";
    case PromptStep::CfsRefine: return "cfs_refine";
    case PromptStep::DcrFillMasks: return "dcr_fill_masks";
    case PromptStep::DcrReclassify: return "dcr_reclassify";
  }
  throw std::invalid_argument("unknown prompt step");
}

template <typename T>
const T& require(const std::optional<T>& value, const char* name) {
  if (!value) throw MissingBinding(name);
  return *value;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Returns nullopt for braces that are not template slots (e.g. {MASK}).
std::optional<std::string> slot_value(std::string_view name, const TemplateId& id,
                                      const Bindings& b) {
  if (name == "review") return require(b.review, "review");
  if (name == "counterfactual") return require(b.counterfactual, "counterfactual");
  if (name == "masked review") return require(b.masked_review, "masked review");
  if (name == "new review") return require(b.new_review, "new review");
  if (name == "classification1")
    return std::string(to_string(require(b.classification1, "classification1")));
  if (name == "classification2")
    return std::string(to_string(require(b.classification2, "classification2")));
  if (name == "prior_words") return format_word_list(require(b.prior_words, "prior_words"));
  if (name == "k") return std::to_string(id.k);
  if (name == "word_slots") return word_slots(id.k);
  return std::nullopt;
}

std::vector<std::string> split_commas(std::string_view body) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = body.find(',', start);
    parts.push_back(trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                            : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::vector<std::string> clip_words(std::vector<std::string> words, int k,
                                    std::vector<ParseWarning>& warnings) {
  words.erase(std::remove(words.begin(), words.end(), std::string()), words.end());
  const auto limit = static_cast<std::size_t>(std::max(k, 0));
  if (words.size() < limit) warnings.push_back(ParseWarning::ShortList);
  if (words.size() > limit) {
    words.resize(limit);
    warnings.push_back(ParseWarning::TruncatedList);
  }
  return words;
}

// Body between the first `open` and the next `close`.
std::optional<std::string_view> bracketed(std::string_view reply, char open, char close) {
  const std::size_t begin = reply.find(open);
  if (begin == std::string_view::npos) return std::nullopt;
  const std::size_t end = reply.find(close, begin + 1);
  if (end == std::string_view::npos) return std::nullopt;
  return reply.substr(begin + 1, end - begin - 1);
}

constexpr std::string_view kOpenTag = "<new>";
constexpr std::string_view kCloseTag = "</new>";

}  // namespace

std::string_view to_string(PromptStep step) { return step_file(step); }

std::string_view to_string(ParseWarning warning) {
  return warning == ParseWarning::ShortList ? "ShortList" : "TruncatedList";
}

std::string trim(std::string_view s) {
  const auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
  auto begin = std::find_if(s.begin(), s.end(), not_space);
  auto end = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return begin < end ? std::string(begin, end) : std::string();
}

std::string_view template_text(PromptStep step, DatasetKind dataset) {
  std::string key = std::string(to_string(dataset)) + "/" + std::string(step_file(step));
  const auto& table = embedded_templates();
  const auto it = table.find(key);
  if (it == table.end()) throw std::invalid_argument("no template for " + key);
  return it->second;
}

std::string render(const TemplateId& id, const Bindings& bindings) {
  if (id.k < 1) throw std::invalid_argument("render: k must be >= 1");
  const std::string_view text = template_text(id.step, id.dataset);
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const std::size_t close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        if (auto value = slot_value(text.substr(i + 1, close - i - 1), id, bindings)) {
          out += *value;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

std::string word_slots(int k) {
  std::string out;
  for (int i = 1; i <= k; ++i) {
    if (i > 1) out += ',';
    out += "word" + std::to_string(i);
  }
  return out;
}

std::string format_word_list(const std::vector<std::string>& words) {
  std::string out = "[";
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ',';
    out += words[i];
  }
  return out + "]";
}

std::string format_class_words(Label label, const std::vector<std::string>& words,
                               DatasetKind dataset) {
  std::string body(to_string(label));
  for (const auto& w : words) body += "," + w;
  if (dataset == DatasetKind::Imdb) return std::string(kOpenTag) + body + std::string(kCloseTag);
  return "<" + body + ">";
}

std::string parse_tagged(std::string_view reply) {
  const std::size_t open = reply.find(kOpenTag);
  if (open == std::string_view::npos) {
    if (reply.find(kCloseTag) != std::string_view::npos)
      throw ParseError(ParseErrorKind::UnbalancedTags, "closing </new> without opening tag");
    throw ParseError(ParseErrorKind::NoTagFound, "no <new> tag in reply");
  }
  const std::size_t body = open + kOpenTag.size();
  const std::size_t close = reply.find(kCloseTag, body);
  if (close == std::string_view::npos)
    throw ParseError(ParseErrorKind::UnbalancedTags, "<new> tag is never closed");
  return trim(reply.substr(body, close - body));
}

Label parse_label(std::string_view text) {
  std::string s = lower(trim(text));
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "positive") return Label::Positive;
  if (s == "negative") return Label::Negative;
  throw ParseError(ParseErrorKind::BadLabel, "not a sentiment label: '" + std::string(text) + "'");
}

ClassWords parse_class_words(std::string_view reply, int k) {
  std::string body;
  if (reply.find(kOpenTag) != std::string_view::npos) {
    body = parse_tagged(reply);
    if (body.size() >= 2 && body.front() == '<' && body.back() == '>')
      body = body.substr(1, body.size() - 2);
  } else {
    auto inner = bracketed(reply, '<', '>');
    if (!inner) throw ParseError(ParseErrorKind::BadFormat, "expected <class,word,...>");
    body = std::string(*inner);
  }
  auto parts = split_commas(body);
  ClassWords out;
  out.label = parse_label(parts.front());
  parts.erase(parts.begin());
  out.words = clip_words(std::move(parts), k, out.warnings);
  return out;
}

WordList parse_word_list(std::string_view reply, int k) {
  auto inner = bracketed(reply, '[', ']');
  if (!inner) throw ParseError(ParseErrorKind::BadFormat, "expected [word,...]");
  WordList out;
  out.words = clip_words(split_commas(*inner), k, out.warnings);
  return out;
}

std::string parse_text_reply(std::string_view reply, DatasetKind dataset) {
  std::string text;
  if (dataset == DatasetKind::Imdb && reply.find(kOpenTag) == std::string_view::npos) {
    text = trim(reply);
  } else {
    text = parse_tagged(reply);
  }
  if (text.empty()) throw ParseError(ParseErrorKind::BadFormat, "empty text reply");
  return text;
}

}  // namespace cfx
