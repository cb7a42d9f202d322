#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfexplain/types.hpp"

namespace cfx {

struct MalformedLine {
  std::size_t line = 0;
  std::string reason;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<MalformedLine> malformed;
};

/// Canonical TSV: one record per line, "text<TAB>label" with label 0
/// (negative) or 1 (positive). The last tab separates the label. Document
/// ids are 1-based line numbers. Malformed lines are skipped and reported.
/// Throws IoError, EmptyCorpus.
Corpus load_corpus(const std::filesystem::path& path, DatasetKind kind);
Corpus parse_corpus(std::string_view content, DatasetKind kind);

/// Writes the canonical TSV form. Throws IoError; std::invalid_argument for
/// texts containing a newline.
void write_corpus(const std::filesystem::path& path, const std::vector<Document>& documents);
std::string format_corpus(const std::vector<Document>& documents);

struct SamplePlan {
  int n = 100;
  std::uint64_t seed = 0;
  std::optional<int> max_words;
};

/// Seeded draw without replacement; documents over max_words are cut at a
/// word boundary and flagged. Throws SampleError when n < 1 or n exceeds the
/// corpus.
std::vector<Document> sample(const std::vector<Document>& corpus, const SamplePlan& plan);

/// Cuts `doc` to its first `max_words` tokens.
Document truncate_words(Document doc, int max_words);

struct DatasetStats {
  double avg_words = 0.0;
  // k -> 100 * k / avg_words, rounded to two decimals.
  std::map<int, double> k_proportions;
};

/// Throws EmptyInput on an empty sample.
DatasetStats stats(const std::vector<Document>& sample, const std::vector<int>& ks);

}  // namespace cfx
