#pragma once

// Gradient-based evasion attacks against the RBF-SVM surrogate, and the Feeder
// that turns them into new training rows.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedread/data.hpp"
#include "feedread/svm.hpp"

namespace feedread::attack {

struct AttackConfig {
  double step_size = 0.5;
  std::size_t max_iters = 200;
  std::vector<data::FeatureBounds> feature_bounds;
  double plateau_tol = 1e-6;
  std::size_t plateau_window = 5;

  void validate(std::size_t dim) const;
};

struct AdversarialExample {
  std::vector<double> x_adv;
  std::vector<double> x_src;
  double y_src = 0.0;
  std::size_t source_index = 0;
  std::size_t iters_used = 0;
  bool surrogate_flip = false;
};

/// Walks x against the sign of the surrogate decision value at x0 (descending
/// f when f(x0) > 0, ascending otherwise) in steps of length step_size along
/// the unit gradient, clipping to the feature bounds after every step. A zero
/// gradient leaves x in place. Stops after max_iters steps or once
/// |f change| < plateau_tol for plateau_window consecutive steps.
AdversarialExample evasion_attack(const svm::RbfSvmModel& model, std::span<const double> x0, double y0,
                                  const AttackConfig& cfg);

struct FeederConfig {
  AttackConfig attack;
  std::size_t cv_folds = 10;
  /// Seeded random subsample used to fit the surrogate; 0 means all rows.
  std::size_t surrogate_max_samples = 600;
  /// Skip the grid search and use these (C, gamma).
  std::optional<std::pair<double, double>> fixed_hyperparameters;
  svm::GridSearchOptions grid;
};

struct FeederResult {
  svm::RbfSvmModel surrogate;
  std::optional<svm::GridSearchResult> grid;
  std::vector<AdversarialExample> examples;
};

/// Fits the surrogate on the binary target task of `train` and attacks
/// `n_points` uniformly sampled rows (with replacement).
FeederResult feeder_generate(const data::EncodedDataset& train, std::size_t n_points, const FeederConfig& cfg,
                             std::uint64_t seed);

/// CSV: feature columns, y_src, source_index, surrogate_flip, iters_used.
void write_adversarial_csv(const std::vector<AdversarialExample>& examples,
                           const std::vector<std::string>& feature_names, const std::filesystem::path& path);

}  // namespace feedread::attack
