#pragma once

// The Feeder/Reader loop: train the Reader, attack a surrogate of the current
// training set, append the adversarial rows with their source labels, retrain
// from scratch, and record test-split metrics after every iteration.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "feedread/attack.hpp"
#include "feedread/data.hpp"
#include "feedread/metrics.hpp"
#include "feedread/nn.hpp"

namespace feedread::framework {

struct FrameworkConfig {
  nn::NetworkSpec network;  // input_dim 0 means "take it from the data"
  nn::OptimizerConfig optimizer;
  std::size_t epochs = 100;
  std::size_t batch_size = 1024;
  std::size_t points_per_iteration = 50;
  double target_adv_fraction = 0.25;
  std::size_t max_iterations = 1000;
  /// Empty attack bounds are filled from the original training rows.
  attack::FeederConfig feeder;
  metrics::FairnessThresholds thresholds;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t train_size = 0;
  std::size_t adv_points = 0;
  double adv_fraction = 0.0;  // adversarial rows / original training rows
  metrics::FairnessReport report;
  double final_train_loss = 0.0;
  std::optional<double> surrogate_c;
  std::optional<double> surrogate_gamma;
  std::optional<double> surrogate_flip_rate;
};

struct RunHistory {
  FrameworkConfig config;
  std::vector<IterationRecord> records;
  nn::NetworkState final_state;
};

/// Called after every evaluated iteration with the network trained in it.
using IterationObserver = std::function<void(const IterationRecord&, const nn::NetworkState&)>;

/// Number of Feeder iterations the loop performs for `n0` original rows.
std::size_t planned_iterations(const FrameworkConfig& cfg, std::size_t n0);

/// Seeds used in iteration k.
std::uint64_t network_seed(std::uint64_t base, std::size_t iteration);
std::uint64_t shuffle_seed(std::uint64_t base, std::size_t iteration);
std::uint64_t feeder_seed(std::uint64_t base, std::size_t iteration);

nn::TrainingData training_data(const data::EncodedDataset& ds);

/// Fresh network for iteration `iteration`, trained on `train`.
nn::TrainResult retrain_fresh(const data::EncodedDataset& train, const FrameworkConfig& cfg, std::size_t iteration);

/// Classifier head: argmax. Regressor head: score > the encoder's threshold.
/// Evaluation labels are `ds.label`; scores are p(class 1) or the raw output.
metrics::PredictionSet predict(const nn::NetworkState& state, const data::EncodedDataset& ds);
metrics::FairnessReport evaluate_model(const nn::NetworkState& state, const data::EncodedDataset& ds,
                                       const metrics::FairnessThresholds& thresholds = {});

/// Rows of `base` followed by the adversarial rows; target, label and a are
/// copied from each example's source row in `base`.
data::EncodedDataset append_adversarial(const data::EncodedDataset& base,
                                        const std::vector<attack::AdversarialExample>& examples);

RunHistory run(const data::EncodedDataset& train, const data::EncodedDataset& test, FrameworkConfig cfg,
               const IterationObserver& observer = {});

nlohmann::json config_to_json(const FrameworkConfig& cfg);
nlohmann::json history_to_json(const RunHistory& history);
std::string history_csv_header();
std::string history_csv_row(const IterationRecord& record);

}  // namespace feedread::framework
