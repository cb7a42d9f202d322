#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cfexplain/lexicon_oracle.hpp"
#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/types.hpp"

namespace cfx::testing {

inline std::filesystem::path tests_dir() { return CFX_TESTS_DIR; }
inline std::filesystem::path data_dir() { return CFX_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cfx_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Independent reference model. Deliberately re-derived here instead of calling
// into the library so that library bugs cannot cancel out.

inline std::string ref_normalize(const std::string& surface) {
  std::size_t b = 0;
  std::size_t e = surface.size();
  const auto punct = [](char c) { return static_cast<unsigned char>(c) < 128 && std::ispunct(static_cast<unsigned char>(c)); };
  while (b < e && punct(surface[b])) ++b;
  while (e > b && punct(surface[e - 1])) --e;
  std::string out = surface.substr(b, e - b);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline std::vector<std::string> ref_split(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

using PolarityMap = std::unordered_map<std::string, double>;

inline double ref_sum(const PolarityMap& lex, const std::string& text) {
  double s = 0.0;
  for (const auto& w : ref_split(text)) {
    auto it = lex.find(ref_normalize(w));
    if (it != lex.end()) s += it->second;
  }
  return s;
}

inline Label ref_classify(const PolarityMap& lex, const std::string& text) {
  return ref_sum(lex, text) > 0.0 ? Label::Positive : Label::Negative;
}

/// Distinct in-lexicon words ordered by |polarity| descending, ties by first occurrence.
inline std::vector<std::string> ref_top_k(const PolarityMap& lex, const std::string& text, int k) {
  std::vector<std::pair<std::string, double>> seen;
  for (const auto& w : ref_split(text)) {
    const std::string n = ref_normalize(w);
    auto it = lex.find(n);
    if (it == lex.end()) continue;
    if (std::none_of(seen.begin(), seen.end(), [&](const auto& p) { return p.first == n; }))
      seen.emplace_back(n, std::fabs(it->second));
  }
  // Insertion sort keeps it obviously stable.
  for (std::size_t i = 1; i < seen.size(); ++i) {
    for (std::size_t j = i; j > 0 && seen[j].second > seen[j - 1].second; --j)
      std::swap(seen[j], seen[j - 1]);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < seen.size() && static_cast<int>(i) < k; ++i) out.push_back(seen[i].first);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticWorld {
  PolarityMap polarity;
  std::unordered_map<std::string, std::string> antonyms;
  std::string positive_filler;
  std::string negative_filler;
  std::vector<std::string> positive_words;
  std::vector<std::string> negative_words;
  std::vector<std::string> neutral_words;

  Lexicon lexicon() const {
    return Lexicon::create(polarity, antonyms, positive_filler, negative_filler);
  }
};

/// `lexicon_size` words (even), split into antonym pairs with distinct
/// magnitudes; the first pair doubles as the fillers.
inline SyntheticWorld make_world(int lexicon_size, std::uint64_t seed) {
  SyntheticWorld w;
  std::mt19937_64 rng(seed);
  const int pairs = lexicon_size / 2;
  for (int i = 0; i < pairs; ++i) {
    const std::string pos = "pos" + std::to_string(i);
    const std::string neg = "neg" + std::to_string(i);
    // Distinct magnitudes so rankings never depend on tie-breaking by accident.
    const double mag = 0.5 + 0.125 * i + 0.001 * static_cast<double>(rng() % 97);
    w.polarity[pos] = mag;
    w.polarity[neg] = -mag;
    w.antonyms[pos] = neg;
    w.positive_words.push_back(pos);
    w.negative_words.push_back(neg);
  }
  w.positive_filler = "pos0";
  w.negative_filler = "neg0";
  for (int i = 0; i < 30; ++i) w.neutral_words.push_back("filler" + std::to_string(i));
  return w;
}

struct SyntheticOptions {
  int min_words = 6;
  int max_words = 14;
  int max_sentiment_words = 4;
  // When set, every in-lexicon word shares the sign of the document label.
  bool same_sign = false;
};

inline std::vector<Document> make_corpus(const SyntheticWorld& w, int n_docs, std::uint64_t seed,
                                         const SyntheticOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  const auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  static const char* kPunct[] = {"", "", "", ",", ".", "!"};
  std::vector<Document> docs;
  for (int d = 0; d < n_docs; ++d) {
    const bool positive = rng() % 2 == 0;
    const int n_words = opt.min_words + static_cast<int>(rng() % (opt.max_words - opt.min_words + 1));
    std::vector<std::string> words;
    for (int i = 0; i < n_words; ++i) words.push_back(pick(w.neutral_words));
    const int n_sent = 1 + static_cast<int>(rng() % opt.max_sentiment_words);
    for (int i = 0; i < n_sent; ++i) {
      const bool use_pos = opt.same_sign ? positive : (rng() % 4 != 0) == positive;
      std::string word = pick(use_pos ? w.positive_words : w.negative_words);
      if (rng() % 5 == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
      word += kPunct[rng() % 6];
      words.insert(words.begin() + static_cast<long>(rng() % (words.size() + 1)), word);
    }
    std::string text;
    for (const auto& x : words) text += (text.empty() ? "" : " ") + x;
    Document doc;
    doc.id = std::to_string(d + 1);
    doc.text = text;
    doc.gold_label = positive ? Label::Positive : Label::Negative;
    doc.word_count = static_cast<int>(words.size());
    docs.push_back(std::move(doc));
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Backends

inline std::shared_ptr<LlmGateway> make_oracle_gateway(const Lexicon& lexicon, double temperature = 0.0,
                                                       std::uint64_t seed = 0, int max_retries = 3) {
  BackendConfig config;
  config.model_name = "lexicon-oracle";
  config.temperature = temperature;
  config.max_retries = max_retries;
  auto gw = std::make_shared<LlmGateway>(std::make_shared<LexiconOracle>(lexicon, seed), config);
  gw->set_sleeper([](std::chrono::milliseconds) {});
  return gw;
}

/// Records every call and answers through a user-supplied function.
class ScriptedBackend : public Backend {
 public:
  using Script = std::function<std::string(const BackendCall&, std::size_t call_index)>;
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  std::string send(const BackendCall& call, const BackendConfig&) override {
    std::size_t index;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      index = calls_.size();
      calls_.push_back(call);
    }
    return script_(call, index);
  }

  std::vector<BackendCall> calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
  }
  std::size_t count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_.size();
  }

 private:
  Script script_;
  mutable std::mutex mutex_;
  std::vector<BackendCall> calls_;
};

/// An oracle whose counterfactuals never flip: it echoes the review back.
inline std::shared_ptr<ScriptedBackend> non_flipping_oracle(const Lexicon& lexicon) {
  auto oracle = std::make_shared<LexiconOracle>(lexicon);
  return std::make_shared<ScriptedBackend>([oracle](const BackendCall& call, std::size_t) {
    if (call.kind == CallKind::MakeCounterfactual) {
      const std::string& review = *call.bindings.review;
      return call.id.dataset == DatasetKind::Imdb ? review : "<new>" + review + "</new>";
    }
    return oracle->answer(call, 0.0);
  });
}

inline std::shared_ptr<LlmGateway> make_gateway(std::shared_ptr<Backend> backend, int max_retries = 3,
                                                double temperature = 0.0) {
  BackendConfig config;
  config.model_name = "scripted";
  config.temperature = temperature;
  config.max_retries = max_retries;
  auto gw = std::make_shared<LlmGateway>(std::move(backend), config);
  gw->set_sleeper([](std::chrono::milliseconds) {});
  return gw;
}

inline Document make_doc(std::string text, Label gold = Label::Positive,
                         DatasetKind kind = DatasetKind::Amazon, std::string id = "1") {
  Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  d.gold_label = gold;
  d.dataset_kind = kind;
  d.word_count = static_cast<int>(ref_split(d.text).size());
  return d;
}

}  // namespace cfx::testing
