#include "cfexplain/datasets.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cfexplain/errors.hpp"
#include "cfexplain/text_processing.hpp"

namespace cfx {

namespace {

// Unbiased bounded draw; std::uniform_int_distribution is not portable
// across standard libraries, and samples must be reproducible.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

Corpus parse_corpus(std::string_view content, DatasetKind kind) {
  Corpus corpus;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    const std::size_t nl = content.find('\n', start);
    std::string_view line =
        content.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      corpus.malformed.push_back({line_no, "no tab separator"});
      continue;
    }
    const std::string_view label = line.substr(tab + 1);
    const std::string_view text = line.substr(0, tab);
    if (label != "0" && label != "1") {
      corpus.malformed.push_back({line_no, "label must be 0 or 1, got '" + std::string(label) + "'"});
      continue;
    }
    Document doc;
    doc.id = std::to_string(line_no);
    doc.text = std::string(text);
    doc.gold_label = label == "1" ? Label::Positive : Label::Negative;
    doc.dataset_kind = kind;
    doc.word_count = static_cast<int>(tokenize(doc.text).tokens.size());
    if (doc.word_count == 0) {
      corpus.malformed.push_back({line_no, "empty text"});
      continue;
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) throw EmptyCorpus("corpus contains no valid records");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, DatasetKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), kind);
}

std::string format_corpus(const std::vector<Document>& documents) {
  std::string out;
  for (const auto& doc : documents) {
    if (doc.text.find('\n') != std::string::npos || doc.text.find('\r') != std::string::npos)
      throw std::invalid_argument("document " + doc.id + " contains a line break");
    out += doc.text;
    out += '\t';
    out += doc.gold_label == Label::Positive ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& documents) {
  const std::string content = format_corpus(documents);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

Document truncate_words(Document doc, int max_words) {
  const TokenizedText tokenized = tokenize(doc.text);
  if (max_words < 1 || static_cast<int>(tokenized.tokens.size()) <= max_words) return doc;
  const Token& last = tokenized.tokens[static_cast<std::size_t>(max_words) - 1];
  doc.text = doc.text.substr(0, last.offset + last.surface.size());
  doc.word_count = max_words;
  doc.truncated = true;
  return doc;
}

std::vector<Document> sample(const std::vector<Document>& corpus, const SamplePlan& plan) {
  if (plan.n < 1) throw SampleError("sample size must be >= 1");
  if (static_cast<std::size_t>(plan.n) > corpus.size()) {
    throw SampleError("sample size " + std::to_string(plan.n) + " exceeds corpus size " +
                      std::to_string(corpus.size()));
  }
  if (plan.max_words && *plan.max_words < 1) throw SampleError("max_words must be >= 1");

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(plan.seed);
  const auto n = static_cast<std::size_t>(plan.n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + bounded(rng, order.size() - i);
    std::swap(order[i], order[j]);
  }

  std::vector<Document> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Document doc = corpus[order[i]];
    if (plan.max_words) doc = truncate_words(std::move(doc), *plan.max_words);
    out.push_back(std::move(doc));
  }
  return out;
}

DatasetStats stats(const std::vector<Document>& sample, const std::vector<int>& ks) {
  if (sample.empty()) throw EmptyInput("cannot compute statistics of an empty sample");
  double total = 0.0;
  for (const auto& doc : sample) total += doc.word_count;
  DatasetStats out;
  out.avg_words = total / static_cast<double>(sample.size());
  for (int k : ks) {
    out.k_proportions[k] = std::round(100.0 * 100.0 * k / out.avg_words) / 100.0;
  }
  return out;
}

}  // namespace cfx
