#include "cfexplain/reporting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "cfexplain/errors.hpp"
#include "cfexplain/text_processing.hpp"

namespace cfx {

using json = nlohmann::json;

namespace {

// Field helpers --------------------------------------------------------------

template <typename T>
T required(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw SchemaError(0, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(0, std::string("bad field '") + key + "': " + e.what());
  }
}

Label label_field(const json& j, const char* key) {
  const auto label = parse_label_name(required<std::string>(j, key));
  if (!label) throw SchemaError(0, std::string("bad label in '") + key + "'");
  return *label;
}

std::optional<Label> optional_label(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return label_field(j, key);
}

Approach approach_field(const json& j, const char* key) {
  const auto a = parse_approach(required<std::string>(j, key));
  if (!a) throw SchemaError(0, std::string("bad approach in '") + key + "'");
  return *a;
}

json label_json(const std::optional<Label>& label) {
  return label ? json(to_string(*label)) : json(nullptr);
}

json stats_json(const CallStats& s) {
  return {{"calls_made", s.calls_made},
          {"retries_used", s.retries_used},
          {"parse_failures", s.parse_failures}};
}

CallStats stats_from(const json& j) {
  CallStats s;
  s.calls_made = j.value("calls_made", std::uint64_t{0});
  s.retries_used = j.value("retries_used", std::uint64_t{0});
  s.parse_failures = j.value("parse_failures", std::uint64_t{0});
  return s;
}

// Payloads -------------------------------------------------------------------

json explanation_json(const ExplanationResult& e) {
  json j = {{"document_id", e.document_id},
            {"approach", to_string(e.approach)},
            {"k", e.k},
            {"predicted_label", to_string(e.predicted_label)},
            {"counterfactual_text", e.counterfactual_text ? json(*e.counterfactual_text) : json()},
            {"counterfactual_label", label_json(e.counterfactual_label)},
            {"initial_words", e.initial_words},
            {"top_words", e.top_words},
            {"fallback_used", e.fallback_used},
            {"calls", stats_json(e.calls)},
            {"warnings", e.warnings}};
  return j;
}

ExplanationResult explanation_from(const json& j) {
  ExplanationResult e;
  e.document_id = required<std::string>(j, "document_id");
  e.approach = approach_field(j, "approach");
  e.k = required<int>(j, "k");
  e.predicted_label = label_field(j, "predicted_label");
  if (j.contains("counterfactual_text") && !j.at("counterfactual_text").is_null())
    e.counterfactual_text = j.at("counterfactual_text").get<std::string>();
  e.counterfactual_label = optional_label(j, "counterfactual_label");
  e.initial_words = j.value("initial_words", std::vector<std::string>{});
  e.top_words = required<std::vector<std::string>>(j, "top_words");
  e.fallback_used = j.value("fallback_used", false);
  if (j.contains("calls")) e.calls = stats_from(j.at("calls"));
  e.warnings = j.value("warnings", std::vector<std::string>{});
  return e;
}

json dcr_json(const DcrRecord& d) {
  json violations = json::array();
  for (const auto& v : d.mask_violations) {
    violations.push_back({{"segment", v.segment_index}, {"expected", v.expected}, {"actual", v.actual}});
  }
  return {{"document_id", d.document_id},
          {"approach", to_string(d.approach)},
          {"k", d.k},
          {"gold_label", to_string(d.gold_label)},
          {"original_label", to_string(d.original_label)},
          {"masked_text", d.masked_text},
          {"filled_text", d.filled_text},
          {"new_label", label_json(d.new_label)},
          {"score", d.score},
          {"mask_violations", std::move(violations)},
          {"unmatched_words", d.unmatched_words},
          {"excluded", d.excluded},
          {"reason", d.reason},
          {"calls", stats_json(d.calls)}};
}

DcrRecord dcr_from(const json& j) {
  DcrRecord d;
  d.document_id = required<std::string>(j, "document_id");
  d.approach = approach_field(j, "approach");
  d.k = required<int>(j, "k");
  d.gold_label = label_field(j, "gold_label");
  d.original_label = label_field(j, "original_label");
  d.masked_text = j.value("masked_text", std::string());
  d.filled_text = j.value("filled_text", std::string());
  d.new_label = optional_label(j, "new_label");
  d.score = required<int>(j, "score");
  if (d.score != 0 && d.score != 1) throw SchemaError(0, "score must be 0 or 1");
  for (const auto& v : j.value("mask_violations", json::array())) {
    d.mask_violations.push_back({v.value("segment", std::size_t{0}), v.value("expected", std::string()),
                                 v.value("actual", std::string())});
  }
  d.unmatched_words = j.value("unmatched_words", std::vector<std::string>{});
  d.excluded = j.value("excluded", false);
  d.reason = j.value("reason", std::string());
  if (j.contains("calls")) d.calls = stats_from(j.at("calls"));
  return d;
}

json weights_json(const WeightVector& w) {
  return {{"document_id", w.document_id}, {"weights", w.weights},
          {"runs", w.runs},               {"requested_runs", w.requested_runs},
          {"excluded_runs", w.excluded_runs}, {"k", w.k},
          {"approach", to_string(w.approach)}};
}

WeightVector weights_from(const json& j) {
  WeightVector w;
  w.document_id = required<std::string>(j, "document_id");
  w.weights = required<std::vector<double>>(j, "weights");
  w.runs = required<int>(j, "runs");
  w.requested_runs = j.value("requested_runs", w.runs);
  w.excluded_runs = j.value("excluded_runs", 0);
  w.k = required<int>(j, "k");
  w.approach = approach_field(j, "approach");
  return w;
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

constexpr Approach kRowOrder[] = {Approach::CFP, Approach::CFS, Approach::DP};
constexpr DatasetKind kDatasetOrder[] = {DatasetKind::Amazon, DatasetKind::Sst2, DatasetKind::Imdb};

struct GroupKey {
  std::string backend;
  Approach approach;
  DatasetKind dataset;
  int k;
  auto operator<=>(const GroupKey&) const = default;
};

struct Grouped {
  std::vector<std::string> backends;  // first-appearance order
  std::map<GroupKey, std::vector<DcrRecord>> groups;
};

Grouped group_records(const std::vector<RunRecord>& records) {
  Grouped g;
  for (const auto& r : records) {
    if (!r.dcr) continue;
    const std::string backend = r.backend_label();
    if (std::find(g.backends.begin(), g.backends.end(), backend) == g.backends.end())
      g.backends.push_back(backend);
    g.groups[{backend, r.dcr->approach, r.dataset_kind, r.dcr->k}].push_back(*r.dcr);
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Run records

json to_json(const RunRecord& r) {
  json j = {{"schema_version", r.schema_version},
            {"timestamp", r.timestamp},
            {"backend",
             {{"model_name", r.backend.model_name},
              {"temperature", r.backend.temperature},
              {"alias", r.backend_alias}}},
            {"dataset_kind", to_string(r.dataset_kind)},
            {"seed", r.seed},
            {"document",
             {{"id", r.document.id},
              {"text", r.document.text},
              {"gold_label", to_string(r.document.gold_label)},
              {"word_count", r.document.word_count},
              {"truncated", r.document.truncated}}},
            {"approach", to_string(r.approach)},
            {"k", r.k},
            {"config", r.config}};
  if (r.explanation) j["explanation"] = explanation_json(*r.explanation);
  if (r.dcr) j["dcr"] = dcr_json(*r.dcr);
  if (r.weights) j["weights"] = weights_json(*r.weights);
  if (r.failure) j["failure"] = *r.failure;
  return j;
}

RunRecord run_record_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError(0, "record is not a JSON object");
  RunRecord r;
  r.schema_version = required<int>(j, "schema_version");
  if (r.schema_version != kRunSchemaVersion)
    throw SchemaError(0, "unsupported schema_version " + std::to_string(r.schema_version));
  r.timestamp = j.value("timestamp", std::string());
  const json backend = required<json>(j, "backend");
  r.backend.model_name = required<std::string>(backend, "model_name");
  r.backend.temperature = backend.value("temperature", 0.0);
  r.backend_alias = backend.value("alias", std::string());
  const auto kind = parse_dataset_kind(required<std::string>(j, "dataset_kind"));
  if (!kind) throw SchemaError(0, "bad dataset_kind");
  r.dataset_kind = *kind;
  r.seed = j.value("seed", std::uint64_t{0});
  const json doc = required<json>(j, "document");
  r.document.id = required<std::string>(doc, "id");
  r.document.text = required<std::string>(doc, "text");
  r.document.gold_label = label_field(doc, "gold_label");
  r.document.dataset_kind = r.dataset_kind;
  r.document.word_count = doc.value("word_count", 0);
  r.document.truncated = doc.value("truncated", false);
  r.approach = approach_field(j, "approach");
  r.k = required<int>(j, "k");
  r.config = j.value("config", std::map<std::string, std::string>{});
  if (j.contains("explanation")) r.explanation = explanation_from(j.at("explanation"));
  if (j.contains("dcr")) r.dcr = dcr_from(j.at("dcr"));
  if (j.contains("weights")) r.weights = weights_from(j.at("weights"));
  if (j.contains("failure") && !j.at("failure").is_null()) r.failure = j.at("failure").get<std::string>();
  return r;
}

void persist(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write run log " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<RunRecord> parse_runs(std::string_view content) {
  std::vector<RunRecord> records;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    const std::size_t nl = content.find('\n', start);
    const std::string_view line =
        content.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw SchemaError(line_no, "not valid JSON");
    try {
      records.push_back(run_record_from_json(j));
    } catch (const SchemaError& e) {
      std::string what = e.what();
      const std::string prefix = "line 0: ";
      if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
      throw SchemaError(line_no, what);
    }
  }
  return records;
}

std::vector<RunRecord> load_runs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open run log " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_runs(buffer.str());
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path, bool truncate)
    : out_(path, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app)), path_(path) {
  if (!out_) throw IoError("cannot open run log " + path.string());
}

void RunLogWriter::append(const RunRecord& record) {
  const std::string line = to_json(record).dump();
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed for " + path_.string());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_decimal(double value) {
  std::string s = fixed(value, 4);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

// ---------------------------------------------------------------------------
// Tables

const TableRow* ResultsTable::find(Approach approach, const std::string& backend) const {
  for (const auto& row : rows) {
    if (row.approach == approach && row.backend == backend) return &row;
  }
  return nullptr;
}

ResultsTable build_table(const std::vector<RunRecord>& records) {
  const Grouped g = group_records(records);
  ResultsTable table;

  std::set<DatasetKind> datasets;
  std::map<DatasetKind, std::set<int>> ks;
  for (const auto& [key, _] : g.groups) {
    datasets.insert(key.dataset);
    ks[key.dataset].insert(key.k);
  }
  for (DatasetKind d : kDatasetOrder) {
    if (!datasets.count(d)) continue;
    table.datasets.push_back(d);
    table.ks[d] = std::vector<int>(ks[d].begin(), ks[d].end());
  }

  for (const auto& backend : g.backends) {
    for (Approach approach : kRowOrder) {
      TableRow row;
      row.approach = approach;
      row.backend = backend;
      bool any = false;
      for (DatasetKind d : table.datasets) {
        double acc_sum = 0.0;
        int acc_n = 0;
        for (int k : table.ks[d]) {
          const auto it = g.groups.find({backend, approach, d, k});
          if (it == g.groups.end()) continue;
          DcrSummary summary;
          try {
            summary = dcr(it->second);
          } catch (const EmptyInput&) {
            continue;
          }
          row.dcr[{d, k}] = summary.dcr;
          acc_sum += summary.accuracy;
          ++acc_n;
          any = true;
        }
        if (acc_n > 0) row.accuracy[d] = acc_sum / acc_n;
      }
      if (any) table.rows.push_back(std::move(row));
    }
  }

  // Best markers: argmax per (backend, dataset, k), ties all marked.
  constexpr double kTieTolerance = 1e-12;
  for (const auto& backend : g.backends) {
    for (DatasetKind d : table.datasets) {
      for (int k : table.ks[d]) {
        const CellKey cell{d, k};
        double best = -1.0;
        for (const auto& row : table.rows) {
          if (row.backend != backend) continue;
          if (auto it = row.dcr.find(cell); it != row.dcr.end()) best = std::max(best, it->second);
        }
        for (auto& row : table.rows) {
          if (row.backend != backend) continue;
          auto it = row.dcr.find(cell);
          if (it != row.dcr.end() && it->second >= best - kTieTolerance) row.best.insert(cell);
        }
      }
    }
  }
  return table;
}

std::string ResultsTable::to_text() const {
  constexpr std::size_t kCell = 8;
  std::size_t first = 10;
  for (const auto& row : rows) {
    first = std::max(first, to_string(row.approach).size() + 1 + row.backend.size() + 2);
  }
  std::ostringstream out;

  std::string top = pad("", first);
  std::string header = pad("Approach", first);
  for (DatasetKind d : datasets) {
    const std::size_t width = kCell * (1 + ks.at(d).size());
    top += "| " + pad(std::string(to_string(d)), width);
    header += "| " + pad("Acc", kCell);
    for (int k : ks.at(d)) header += pad("DCR_" + std::to_string(k), kCell);
  }
  const auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };
  out << rstrip(top) << '\n' << rstrip(header) << '\n' << std::string(header.size(), '-') << '\n';

  for (const auto& row : rows) {
    std::string line = pad(std::string(to_string(row.approach)) + "-" + row.backend, first);
    for (DatasetKind d : datasets) {
      const auto acc = row.accuracy.find(d);
      line += "| " + pad(acc == row.accuracy.end() ? "-" : fixed(100.0 * acc->second, 0) + "%", kCell);
      for (int k : ks.at(d)) {
        const CellKey cell{d, k};
        const auto v = row.dcr.find(cell);
        std::string text = v == row.dcr.end() ? "-" : fixed(v->second, 2);
        if (row.best.count(cell)) text += "*";
        line += pad(text, kCell);
      }
    }
    out << rstrip(line) << '\n';
  }
  out << "* best DCR per model, dataset and k\n";
  return out.str();
}

std::string ResultsTable::to_csv() const {
  std::ostringstream out;
  out << "approach,backend,dataset,k,accuracy,dcr,best\n";
  for (const auto& row : rows) {
    for (DatasetKind d : datasets) {
      for (int k : ks.at(d)) {
        const CellKey cell{d, k};
        const auto v = row.dcr.find(cell);
        if (v == row.dcr.end()) continue;
        out << to_string(row.approach) << ',' << row.backend << ',' << to_string(d) << ',' << k
            << ',' << format_decimal(row.accuracy.at(d)) << ',' << format_decimal(v->second) << ','
            << (row.best.count(cell) ? 1 : 0) << '\n';
      }
    }
  }
  return out.str();
}

std::string render_k_curves(const std::vector<RunRecord>& records) {
  const ResultsTable table = build_table(records);
  std::ostringstream out;
  out << "approach,backend,dataset,k,dcr\n";
  for (const auto& row : table.rows) {
    for (DatasetKind d : table.datasets) {
      for (int k : table.ks.at(d)) {
        const auto v = row.dcr.find({d, k});
        if (v == row.dcr.end()) continue;
        out << to_string(row.approach) << ',' << row.backend << ',' << to_string(d) << ',' << k
            << ',' << format_decimal(v->second) << '\n';
      }
    }
  }
  return out.str();
}

void emit_k_curves(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  const std::string content = render_k_curves(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------
// Heatmap

std::string render_heatmap(const Document& doc, const WeightVector& weights) {
  const TokenizedText tokenized = tokenize(doc.text);
  if (tokenized.tokens.size() != weights.weights.size()) {
    throw LengthMismatch("document has " + std::to_string(tokenized.tokens.size()) +
                         " tokens but the weight vector has " +
                         std::to_string(weights.weights.size()) + " entries");
  }
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>Word importance: document " << html_escape(doc.id) << "</title>\n"
      << "<style>\n"
      << "body { font-family: sans-serif; margin: 2em; }\n"
      << ".doc { white-space: pre-wrap; line-height: 1.9; font-size: 1.1em; }\n"
      << ".w { border-radius: 3px; padding: 0 1px; }\n"
      << "</style>\n</head>\n<body>\n"
      << "<h1>Document " << html_escape(doc.id) << "</h1>\n"
      << "<p>" << to_string(weights.approach) << ", k=" << weights.k << ", " << weights.runs
      << " run(s)</p>\n<div class=\"doc\">";
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < tokenized.tokens.size(); ++i) {
    const Token& t = tokenized.tokens[i];
    out << html_escape(std::string_view(doc.text).substr(cursor, t.offset - cursor));
    const double w = std::clamp(weights.weights[i], 0.0, 1.0);
    out << "<span class=\"w\" title=\"weight " << fixed(w, 3) << "\"";
    if (w > 0.0) out << " style=\"background-color: rgba(220, 38, 38, " << fixed(w, 3) << ")\"";
    out << ">" << html_escape(t.surface) << "</span>";
    cursor = t.offset + t.surface.size();
  }
  out << html_escape(std::string_view(doc.text).substr(cursor)) << "</div>\n</body>\n</html>\n";
  return out.str();
}

void emit_heatmap(const Document& doc, const WeightVector& weights,
                  const std::filesystem::path& path) {
  const std::string html = render_heatmap(doc, weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << html;
}

}  // namespace cfx
