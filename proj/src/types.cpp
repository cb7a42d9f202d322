#include "cfexplain/types.hpp"

#include <algorithm>
#include <cctype>

namespace cfx {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::Positive ? "positive" : "negative";
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Amazon: return "amazon";
    case DatasetKind::Sst2: return "sst2";
    case DatasetKind::Imdb: return "imdb";
  }
  return "unknown";
}

std::string_view to_string(Approach approach) {
  switch (approach) {
    case Approach::DP: return "DP";
    case Approach::CFP: return "CFP";
    case Approach::CFS: return "CFS";
  }
  return "unknown";
}

std::optional<Label> parse_label_name(std::string_view name) {
  const std::string s = lower(name);
  if (s == "positive") return Label::Positive;
  if (s == "negative") return Label::Negative;
  return std::nullopt;
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view name) {
  const std::string s = lower(name);
  if (s == "amazon") return DatasetKind::Amazon;
  if (s == "sst2" || s == "sst-2") return DatasetKind::Sst2;
  if (s == "imdb") return DatasetKind::Imdb;
  return std::nullopt;
}

std::optional<Approach> parse_approach(std::string_view name) {
  const std::string s = lower(name);
  if (s == "dp") return Approach::DP;
  if (s == "cfp") return Approach::CFP;
  if (s == "cfs") return Approach::CFS;
  return std::nullopt;
}

std::vector<int> default_ks(DatasetKind kind) {
  if (kind == DatasetKind::Imdb) return {3, 5};
  return {1, 2, 3};
}

}  // namespace cfx
