#include "cfexplain/lexicon_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cfexplain/errors.hpp"
#include "cfexplain/text_processing.hpp"

namespace cfx {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a_u64(std::uint64_t value, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos
                                                                      : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string checked_word(std::string_view raw, std::size_t line_no) {
  std::string word = normalize_word(trim(raw));
  if (word.empty() || word.find_first_of(" ,\t") != std::string::npos) {
    throw LexiconError("line " + std::to_string(line_no) + ": invalid word '" + std::string(raw) +
                       "'");
  }
  return word;
}

std::string wrap_text(std::string_view text, DatasetKind dataset) {
  if (dataset == DatasetKind::Imdb) return std::string(text);
  return "<new>" + std::string(text) + "</new>";
}

struct Candidate {
  std::string word;
  double magnitude;
  std::size_t first_position;
};

std::vector<Candidate> distinct_known_words(const Lexicon& lexicon, std::string_view text) {
  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  const TokenizedText tokenized = tokenize(text);
  for (std::size_t i = 0; i < tokenized.tokens.size(); ++i) {
    const Token& t = tokenized.tokens[i];
    if (!is_matchable(t)) continue;
    const auto p = lexicon.polarity(t.normalized);
    if (!p || !seen.insert(t.normalized).second) continue;
    out.push_back({t.normalized, std::fabs(*p), i});
  }
  return out;
}

std::vector<std::string> rank(std::vector<Candidate> candidates, int k) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.magnitude > b.magnitude; });
  std::vector<std::string> out;
  for (const auto& c : candidates) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(c.word);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lexicon

Lexicon Lexicon::create(std::unordered_map<std::string, double> polarity,
                        std::unordered_map<std::string, std::string> antonyms,
                        std::string positive_filler, std::string negative_filler) {
  Lexicon lex;
  lex.polarity_ = std::move(polarity);
  lex.positive_filler_ = std::move(positive_filler);
  lex.negative_filler_ = std::move(negative_filler);

  const auto pos = lex.polarity_.find(lex.positive_filler_);
  const auto neg = lex.polarity_.find(lex.negative_filler_);
  if (pos == lex.polarity_.end() || neg == lex.polarity_.end())
    throw LexiconError("both fillers must be lexicon entries");
  if (!(pos->second > 0.0) || !(neg->second < 0.0))
    throw LexiconError("positive filler must be positive and negative filler negative");
  if (pos->second != -neg->second)
    throw LexiconError("fillers must share the same magnitude");
  lex.filler_magnitude_ = pos->second;

  for (const auto& [word, other] : antonyms) {
    const auto a = lex.polarity_.find(word);
    const auto b = lex.polarity_.find(other);
    if (a == lex.polarity_.end() || b == lex.polarity_.end())
      throw LexiconError("antonym pair " + word + "/" + other + " is not in the lexicon");
    if (!(a->second * b->second < 0.0))
      throw LexiconError("antonyms " + word + "/" + other + " must have opposite signs");
    const auto back = antonyms.find(other);
    if (back != antonyms.end() && back->second != word)
      throw LexiconError("antonym of " + other + " must be " + word);
  }
  lex.antonyms_ = std::move(antonyms);
  std::vector<std::pair<std::string, std::string>> inverses;
  for (const auto& [word, other] : lex.antonyms_) {
    if (!lex.antonyms_.count(other)) inverses.emplace_back(other, word);
  }
  for (auto& [word, other] : inverses) lex.antonyms_.emplace(std::move(word), std::move(other));
  return lex;
}

Lexicon Lexicon::parse(std::string_view content) {
  std::unordered_map<std::string, double> polarity;
  std::unordered_map<std::string, std::string> antonyms;
  std::string positive_filler;
  std::string negative_filler;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    const std::size_t nl = content.find('\n', start);
    std::string_view line = content.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                               : nl - start);
    start = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;

    const auto fields = split_tabs(line);
    if (line.front() == '!') {
      if (fields.size() != 2)
        throw LexiconError("line " + std::to_string(line_no) + ": expected !key<TAB>word");
      const std::string_view key = fields[0].substr(1);
      if (key == "positive_filler") {
        positive_filler = checked_word(fields[1], line_no);
      } else if (key == "negative_filler") {
        negative_filler = checked_word(fields[1], line_no);
      } else {
        throw LexiconError("line " + std::to_string(line_no) + ": unknown header '" +
                           std::string(key) + "'");
      }
      continue;
    }
    if (fields.size() < 2 || fields.size() > 3)
      throw LexiconError("line " + std::to_string(line_no) +
                         ": expected word<TAB>weight[<TAB>antonym]");
    const std::string word = checked_word(fields[0], line_no);
    const std::string weight_text = trim(fields[1]);
    double weight = 0.0;
    std::size_t used = 0;
    try {
      weight = std::stod(weight_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != weight_text.size() || !std::isfinite(weight))
      throw LexiconError("line " + std::to_string(line_no) + ": bad weight '" + weight_text + "'");
    if (!polarity.emplace(word, weight).second)
      throw LexiconError("line " + std::to_string(line_no) + ": duplicate word '" + word + "'");
    if (fields.size() == 3 && !trim(fields[2]).empty())
      antonyms.emplace(word, checked_word(fields[2], line_no));
  }
  if (positive_filler.empty() || negative_filler.empty())
    throw LexiconError("lexicon must declare !positive_filler and !negative_filler");
  return create(std::move(polarity), std::move(antonyms), std::move(positive_filler),
                std::move(negative_filler));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::optional<double> Lexicon::polarity(std::string_view normalized_word) const {
  const auto it = polarity_.find(std::string(normalized_word));
  if (it == polarity_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Lexicon::antonym(std::string_view normalized_word) const {
  const auto it = antonyms_.find(std::string(normalized_word));
  if (it == antonyms_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// LexiconOracle

LexiconOracle::LexiconOracle(Lexicon lexicon, std::uint64_t seed)
    : lexicon_(std::move(lexicon)), seed_(seed) {}

double LexiconOracle::polarity_sum(std::string_view text) const {
  double sum = 0.0;
  for (const Token& t : tokenize(text).tokens) {
    if (!is_matchable(t)) continue;
    if (auto p = lexicon_.polarity(t.normalized)) sum += *p;
  }
  return sum;
}

Label LexiconOracle::classify(std::string_view text) const {
  return polarity_sum(text) > 0.0 ? Label::Positive : Label::Negative;
}

std::vector<std::string> LexiconOracle::top_k(std::string_view text, int k) const {
  if (k <= 0) return {};
  return rank(distinct_known_words(lexicon_, text), k);
}

std::vector<std::string> LexiconOracle::top_k(std::string_view text, int k, double temperature,
                                              std::mt19937_64& rng) const {
  if (k <= 0) return {};
  auto candidates = distinct_known_words(lexicon_, text);
  if (temperature > 0.0) {
    std::uniform_real_distribution<double> jitter(1.0 - temperature / 2.0,
                                                  1.0 + temperature / 2.0);
    for (auto& c : candidates) c.magnitude *= jitter(rng);
  }
  return rank(std::move(candidates), k);
}

CounterfactualEdit LexiconOracle::counterfactual(std::string_view text) const {
  TokenizedText tokenized = tokenize(text);
  const Label original = classify(text);

  struct Swap {
    std::size_t index;
    double magnitude;
    std::string replacement;
  };
  std::vector<Swap> swaps;
  for (std::size_t i = 0; i < tokenized.tokens.size(); ++i) {
    const Token& t = tokenized.tokens[i];
    if (!is_matchable(t)) continue;
    const auto p = lexicon_.polarity(t.normalized);
    const auto a = lexicon_.antonym(t.normalized);
    if (p && a) swaps.push_back({i, std::fabs(*p), *a});
  }
  std::stable_sort(swaps.begin(), swaps.end(),
                   [](const Swap& x, const Swap& y) { return x.magnitude > y.magnitude; });

  CounterfactualEdit edit{tokenized.original, false, 0};
  for (const Swap& s : swaps) {
    Token& t = tokenized.tokens[s.index];
    t.surface = replace_word_core(t.surface, s.replacement);
    t.normalized = s.replacement;
    ++edit.swaps;
    edit.text = tokenized.reconstruct();
    if (classify(edit.text) != original) {
      edit.flipped = true;
      break;
    }
  }
  return edit;
}

std::string LexiconOracle::fill_masks(std::string_view masked_text, Label target) const {
  const std::string& filler = lexicon_.filler(target);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = masked_text.find(kMaskToken, pos);
    if (hit == std::string_view::npos) {
      out.append(masked_text.substr(pos));
      break;
    }
    out.append(masked_text.substr(pos, hit - pos));
    out += filler;
    pos = hit + kMaskToken.size();
  }
  return out;
}

std::mt19937_64 LexiconOracle::call_rng(const BackendCall& call) const {
  std::uint64_t h = fnv1a_u64(seed_, 14695981039346656037ULL);
  h = fnv1a_u64(call.sample_stream, h);
  h = fnv1a_u64(static_cast<std::uint64_t>(call.id.step), h);
  h = fnv1a_u64(static_cast<std::uint64_t>(call.id.k), h);
  h = fnv1a(subject_text(call), h);
  return std::mt19937_64(h);
}

std::string LexiconOracle::answer(const BackendCall& call, double temperature) const {
  const DatasetKind dataset = call.id.dataset;
  const auto review = [&]() -> const std::string& {
    if (!call.bindings.review) throw UnsupportedCall("call carries no review");
    return *call.bindings.review;
  };
  const auto ranked = [&](std::string_view text) {
    auto rng = call_rng(call);
    return top_k(text, call.id.k, temperature, rng);
  };

  switch (call.kind) {
    case CallKind::Classify:
      return "<new>" + std::string(to_string(classify(subject_text(call)))) + "</new>";
    case CallKind::TopKWithClass:
      return format_class_words(classify(review()), ranked(review()), dataset);
    case CallKind::MakeCounterfactual:
      return wrap_text(counterfactual(review()).text, dataset);
    case CallKind::TopKFromPair:
    case CallKind::RefineTopK:
      // The oracle is always confident: refinement keeps its own ranking.
      return format_word_list(ranked(review()));
    case CallKind::FillMasks: {
      if (!call.bindings.masked_review || !call.bindings.classification2)
        throw UnsupportedCall("fill call needs a masked review and a target label");
      return wrap_text(fill_masks(*call.bindings.masked_review, *call.bindings.classification2),
                       dataset);
    }
  }
  throw UnsupportedCall("oracle cannot answer call kind " +
                        std::to_string(static_cast<int>(call.kind)));
}

std::string LexiconOracle::send(const BackendCall& call, const BackendConfig& config) {
  return answer(call, config.temperature);
}

std::string_view subject_text(const BackendCall& call) {
  const Bindings& b = call.bindings;
  switch (call.id.step) {
    case PromptStep::ClassifyCounterfactual:
      return b.counterfactual ? std::string_view(*b.counterfactual) : std::string_view();
    case PromptStep::DcrReclassify:
      return b.new_review ? std::string_view(*b.new_review) : std::string_view();
    case PromptStep::DcrFillMasks:
      return b.masked_review ? std::string_view(*b.masked_review) : std::string_view();
    default:
      return b.review ? std::string_view(*b.review) : std::string_view();
  }
}

}  // namespace cfx
