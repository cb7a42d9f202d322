#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfexplain/dcr_eval.hpp"
#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/pipelines.hpp"
#include "cfexplain/types.hpp"

namespace cfx {

inline constexpr int kRunSchemaVersion = 1;

/// One line of the run log. Self-describing: it carries the document text,
/// the backend identity and the effective configuration, so evaluation and
/// reporting never need the original corpus.
struct RunRecord {
  int schema_version = kRunSchemaVersion;
  std::string timestamp;
  BackendIdentity backend;
  // Short display name for tables ("L3"); falls back to the model name.
  std::string backend_alias;
  DatasetKind dataset_kind = DatasetKind::Amazon;
  std::uint64_t seed = 0;
  Document document;
  Approach approach = Approach::DP;
  int k = 0;
  std::map<std::string, std::string> config;
  std::optional<ExplanationResult> explanation;
  std::optional<DcrRecord> dcr;
  std::optional<WeightVector> weights;
  // Set when the pipeline could not finish this document.
  std::optional<std::string> failure;

  bool operator==(const RunRecord&) const = default;

  std::string backend_label() const {
    return backend_alias.empty() ? backend.model_name : backend_alias;
  }
};

nlohmann::json to_json(const RunRecord& record);
/// Unknown fields are ignored. Throws SchemaError (line 0) on a wrong
/// schema_version or missing required fields.
RunRecord run_record_from_json(const nlohmann::json& j);

/// Overwrites `path` with one JSON object per line.
void persist(const std::vector<RunRecord>& records, const std::filesystem::path& path);
/// Throws IoError; SchemaError with the 1-based line number.
std::vector<RunRecord> load_runs(const std::filesystem::path& path);
std::vector<RunRecord> parse_runs(std::string_view content);

/// Serialized appends to one log file, safe to share between workers.
class RunLogWriter {
 public:
  explicit RunLogWriter(const std::filesystem::path& path, bool truncate = false);
  void append(const RunRecord& record);

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Tables

struct CellKey {
  DatasetKind dataset;
  int k;
  auto operator<=>(const CellKey&) const = default;
};

struct TableRow {
  Approach approach = Approach::DP;
  std::string backend;
  std::map<DatasetKind, double> accuracy;
  std::map<CellKey, double> dcr;
  std::set<CellKey> best;
};

struct ResultsTable {
  std::vector<DatasetKind> datasets;
  std::map<DatasetKind, std::vector<int>> ks;
  std::vector<TableRow> rows;

  const TableRow* find(Approach approach, const std::string& backend) const;
  std::string to_text() const;
  /// Long form: approach,backend,dataset,k,accuracy,dcr,best
  std::string to_csv() const;
};

/// Groups evaluated records by (approach, backend, dataset, k). Best markers
/// are the argmax DCR per (backend, dataset, k), ties all marked. Accuracy is
/// averaged over the k's of each (approach, backend, dataset).
ResultsTable build_table(const std::vector<RunRecord>& records);

/// "approach,backend,dataset,k,dcr" series for plotting DCR against k.
std::string render_k_curves(const std::vector<RunRecord>& records);
void emit_k_curves(const std::vector<RunRecord>& records, const std::filesystem::path& path);

/// Self-contained HTML with one span per token, tinted by weight. Throws
/// LengthMismatch when the weights do not align with the document tokens.
std::string render_heatmap(const Document& doc, const WeightVector& weights);
void emit_heatmap(const Document& doc, const WeightVector& weights,
                  const std::filesystem::path& path);

/// Up to four decimals, trailing zeros removed: 0.8200 -> "0.82", 1 -> "1".
std::string format_decimal(double value);

}  // namespace cfx
