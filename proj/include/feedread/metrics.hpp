#pragma once

// Utility and group-fairness measures over binary predictions.
// Convention: y_hat = 1 is the desired outcome, a = 1 the disadvantaged group.

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "feedread/common.hpp"

namespace feedread::metrics {

struct PredictionSet {
  std::vector<int> y_hat;
  std::vector<int> y;
  std::vector<int> a;
  std::optional<std::vector<double>> scores;

  /// Throws InvalidArgument on mismatched lengths, empty input or non-binary values.
  void validate() const;
};

/// Confusion counts per protected group (index = value of a).
struct GroupCounts {
  std::array<std::size_t, 2> n{};
  std::array<std::size_t, 2> predicted_positive{};
  std::array<std::size_t, 2> actual_positive{};
  std::array<std::size_t, 2> true_positive{};

  static GroupCounts tally(const PredictionSet& p);
};

/// Reference thresholds, reported but never enforced.
struct FairnessThresholds {
  double epsilon = 0.05;  // DP <= epsilon
  double tau = 0.8;       // DPR >= tau (80% rule)
  double nu = 0.05;       // EO <= nu
};

struct FairnessReport {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  std::optional<double> dp;
  std::optional<double> dpr;
  std::optional<double> eo;
  std::optional<double> auc;
  GroupCounts counts;
  FairnessThresholds thresholds;
};

double demographic_parity(const PredictionSet& p);
/// P(y_hat=1 | a=1) / P(y_hat=1 | a=0); nullopt when the denominator is zero.
std::optional<double> dp_ratio(const PredictionSet& p);
double equal_opportunity(const PredictionSet& p);

struct Utility {
  double accuracy = 0.0;
  double f1_macro = 0.0;
};
Utility utility(const PredictionSet& p);

/// Mann-Whitney AUC; ties count one half. Throws UndefinedMetric unless both labels occur.
double auc(std::span<const double> scores, std::span<const int> labels);

/// All metrics; undefined ones are left empty rather than raising.
FairnessReport evaluate(const PredictionSet& p, const FairnessThresholds& thresholds = {});

// Serialization: fixed column order model, split, acc, f1, dp, dpr, eo, auc.
// Undefined values are written as "*".
std::string format_metric(const std::optional<double>& v);
std::string report_csv_header();
std::string report_csv_row(const std::string& model, const std::string& split, const FairnessReport& r);
nlohmann::json report_to_json(const FairnessReport& r);
FairnessReport report_from_json(const nlohmann::json& j);

}  // namespace feedread::metrics
