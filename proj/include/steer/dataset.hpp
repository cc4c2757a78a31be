#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace steer {

/// Labelled tabular dataset. Features are row-major; labels index `classes`.
struct Dataset {
  std::string id;
  std::string name;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<std::string> classes;  // first-appearance order
  int positive_class = 0;
  std::vector<std::string> feature_names;

  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * n_cols, n_cols};
  }
  double at(std::size_t r, std::size_t c) const { return features[r * n_cols + c]; }
  int n_classes() const { return static_cast<int>(classes.size()); }
  std::vector<std::size_t> class_counts() const;
};

/// Parses a header-first CSV whose final column is the class label.
/// Rejections carry {row, column} (1-based data row, 1-based column).
Dataset load_csv(std::string_view bytes, std::string name = {},
                 std::optional<std::string> positive_class = std::nullopt);

std::string to_csv(const Dataset& ds);

/// Content-derived identifier (`ds-` + 64-bit FNV-1a of the bytes).
std::string dataset_id_for(std::string_view bytes);

/// Two isotropic unit-variance Gaussian blobs whose centres lie
/// `separation` standard deviations apart; classes "negative"/"positive".
Dataset make_blobs(std::size_t n, std::size_t d, double separation, std::uint64_t seed);

nlohmann::json describe(const Dataset& ds);

/// Row subset view materialized as a new dataset (same classes).
Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows);

}  // namespace steer
