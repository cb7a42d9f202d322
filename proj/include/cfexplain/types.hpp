#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfx {

enum class Label { Negative, Positive };

enum class DatasetKind { Amazon, Sst2, Imdb };

enum class Approach { DP, CFP, CFS };

std::string_view to_string(Label label);
std::string_view to_string(DatasetKind kind);
std::string_view to_string(Approach approach);

// Case-insensitive; returns nullopt on anything unrecognized.
std::optional<Label> parse_label_name(std::string_view name);
std::optional<DatasetKind> parse_dataset_kind(std::string_view name);
std::optional<Approach> parse_approach(std::string_view name);

constexpr Label opposite(Label label) {
  return label == Label::Positive ? Label::Negative : Label::Positive;
}

// k values used by the experiment grid for each corpus.
std::vector<int> default_ks(DatasetKind kind);

/// One labeled text input.
struct Document {
  std::string id;
  std::string text;
  Label gold_label = Label::Negative;
  DatasetKind dataset_kind = DatasetKind::Amazon;
  int word_count = 0;
  bool truncated = false;

  bool operator==(const Document&) const = default;
};

}  // namespace cfx
