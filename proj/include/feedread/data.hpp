#pragma once

// Loading, filtering, encoding and splitting of tabular fairness datasets,
// plus a synthetic generator with a controllable amount of group bias.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "feedread/common.hpp"
#include "feedread/csv.hpp"

namespace feedread::data {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class FeatureKind { Numeric, Categorical };
enum class TargetKind { Binary, Regression };

/// `column op value`. Ops: == != < <= > >= and `in` (values separated by '|').
/// Comparisons are numeric when both sides parse as numbers.
struct Predicate {
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge, In };
  std::string column;
  Op op = Op::Eq;
  std::vector<std::string> values;

  static Predicate parse(std::string_view text);
  std::string to_string() const;
};

struct ColumnSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
};

struct DatasetSpec {
  std::string name;
  std::filesystem::path csv_path;
  TargetKind target_kind = TargetKind::Binary;
  std::string target_column;
  std::optional<Predicate> positive_rule;    // binary targets
  double regression_threshold = 4.0;          // regression: score > threshold is positive
  std::optional<Predicate> label_rule;        // evaluation label if it differs from the target
  std::string protected_column;
  Predicate disadvantaged_rule;
  std::vector<ColumnSpec> features;
  std::vector<Predicate> row_filter;
  std::vector<std::string> missing_tokens{"", "?", "NA"};
  bool allow_protected_feature = false;

  /// Throws InvalidArgument when target/protected columns leak into the features.
  void validate() const;
};

/// Parses the key = value preset format (see README). Relative csv paths
/// resolve against `base_dir`.
DatasetSpec parse_dataset_spec(std::string_view text, const std::filesystem::path& base_dir = {});
DatasetSpec load_dataset_spec(const std::filesystem::path& path);
/// Built-in presets: "compas", "german", "adult".
DatasetSpec preset(std::string_view name);
std::string preset_text(std::string_view name);
std::vector<std::string> preset_names();

/// Rows that survived missing-value removal and filtering, with parsed labels.
struct RawTable {
  csv::Table table;
  std::vector<std::size_t> kept;  // indices into table.rows
  std::vector<double> target;
  std::vector<int> label;
  std::vector<int> a;
  std::size_t dropped_missing = 0;
  std::size_t dropped_filter = 0;

  std::size_t size() const { return kept.size(); }
};

RawTable load_table(const DatasetSpec& spec);
RawTable load_table(const DatasetSpec& spec, const csv::Table& table);

struct EncodedColumn {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::size_t offset = 0;                // first column in X
  std::vector<std::string> categories;   // categorical: one X column per entry
  double mean = 0.0;                     // numeric
  double scale = 1.0;
  bool constant = false;                 // numeric feature with zero spread; scale forced to 1

  std::size_t width() const { return kind == FeatureKind::Categorical ? categories.size() : 1; }
};

struct EncoderState {
  std::vector<EncodedColumn> columns;
  TargetKind target_kind = TargetKind::Binary;
  double regression_threshold = 4.0;

  std::size_t width() const;
  std::vector<std::string> feature_names() const;
  nlohmann::json to_json() const;
  static EncoderState from_json(const nlohmann::json& j);
};

struct FeatureBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct EncodedDataset {
  Matrix x;
  Vector target;           // 0/1 or regression score
  std::vector<int> label;  // binary outcome used for evaluation
  std::vector<int> a;
  std::vector<FeatureBounds> bounds;
  EncoderState encoder;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  /// The target as a binary task: itself for classification, score > threshold for regression.
  std::vector<int> target_binary() const;
  Vector a_vector() const;
};

/// Categories from every row, numeric statistics from `fit_rows` (indices into raw.kept).
EncoderState fit_encoder(const DatasetSpec& spec, const RawTable& raw, std::span<const std::size_t> fit_rows);
EncodedDataset encode(const EncoderState& encoder, const RawTable& raw, std::span<const std::size_t> rows);
/// Loads, filters and encodes with statistics from every row.
EncodedDataset load_and_encode(const DatasetSpec& spec);

/// Category string for row `row` of categorical column `column` (inverse of the one-hot).
std::string decode_category(const EncodedDataset& ds, std::size_t row, std::string_view column);

/// Per-feature bounds: data min/max for numeric columns, [0, 1] for one-hot columns.
std::vector<FeatureBounds> compute_bounds(const Matrix& x, const EncoderState& encoder);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Stratified on (label, a); each non-empty stratum contributes round(test_fraction * size)
/// test rows, at least one and leaving at least one for training.
Split stratified_split(std::span<const int> label, std::span<const int> a, double test_fraction, std::uint64_t seed);
Split split(const EncodedDataset& ds, double test_fraction, std::uint64_t seed);

/// Rows of `ds` in the given order; bounds are recomputed from the subset.
EncodedDataset subset(const EncodedDataset& ds, std::span<const std::size_t> rows);

struct PreparedData {
  EncodedDataset train;
  EncodedDataset test;
  Split split;
  std::size_t dropped_missing = 0;
  std::size_t dropped_filter = 0;
};

/// Split first, then fit the encoder on the training rows only.
PreparedData prepare(const DatasetSpec& spec, double test_fraction, std::uint64_t seed);
PreparedData prepare(const DatasetSpec& spec, const RawTable& raw, double test_fraction, std::uint64_t seed);

/// Synthetic data with group bias controlled by `bias_strength` in [0, 1].
///
/// Recipe, per row:
///   a ~ Bernoulli(1/2)
///   y ~ Bernoulli(1/2 + 0.2 * b)    when a = 0
///       Bernoulli(1/2 - 0.2 * b)    when a = 1
///   core_1, core_2 ~ N(+-0.3, 1)    sign from y (the two label clusters)
///   proxy ~ N(1.5 * (2a - 1), 1)    redundant encoding of a
///   noise_1, noise_2 ~ N(0, 1)
/// With b = 0 the label is independent of a and of the proxy.
EncodedDataset synthetic_biased(std::size_t n, double bias_strength, std::uint64_t seed);

/// Encoded CSV: one column per feature, then target, label, a.
void write_encoded_csv(const EncodedDataset& ds, const std::filesystem::path& path);
EncodedDataset read_encoded_csv(const std::filesystem::path& path, const EncoderState& encoder);

}  // namespace feedread::data
