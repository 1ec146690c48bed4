#pragma once

// Soft-margin RBF-kernel SVM trained with SMO (maximal-violating-pair working
// set, no shrinking). The model is the Feeder's differentiable surrogate:
//
//   f(x) = sum_i dual_coefs[i] * exp(-gamma * |x - sv_i|^2) + bias
//
// where dual_coefs[i] = alpha_i * y_i with y_i in {-1, +1}.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "feedread/common.hpp"

namespace feedread::svm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RbfSvmModel {
  Matrix support_vectors;  // one per row
  Vector dual_coefs;
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;

  std::size_t dimension() const { return static_cast<std::size_t>(support_vectors.cols()); }
};

struct SmoOptions {
  double tolerance = 1e-3;  // stop when the maximal KKT violation drops below this
  std::size_t max_iterations = 10'000'000;
};

/// Dual solution on a precomputed kernel matrix (labels in {-1, +1}).
struct DualSolution {
  Vector alpha;
  double bias = 0.0;
  std::size_t iterations = 0;
};

DualSolution solve_dual(const Matrix& kernel, std::span<const int> signed_labels, double c,
                        const SmoOptions& options = {});

/// Trains on labels in {0, 1}; 1 maps to +1 and 0 to -1. `seed` fixes the
/// order in which tied working-set candidates are visited.
RbfSvmModel svm_train(const Matrix& x, std::span<const int> labels, double c, double gamma, std::uint64_t seed,
                      const SmoOptions& options = {});

double svm_decision(const RbfSvmModel& model, std::span<const double> x);
Vector svm_gradient(const RbfSvmModel& model, std::span<const double> x);
/// 1 if the decision value is positive, else 0.
int svm_predict(const RbfSvmModel& model, std::span<const double> x);

inline const std::vector<double> kGridC{0.0001, 0.001, 0.01, 0.1, 1.0};
inline const std::vector<double> kGridGamma{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};

struct GridCell {
  double c = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
};

struct GridSearchResult {
  double best_c = 0.0;
  double best_gamma = 0.0;
  double best_accuracy = 0.0;
  std::vector<GridCell> table;  // C-major, both axes ascending
};

struct GridSearchOptions {
  std::vector<double> c_values = kGridC;
  std::vector<double> gamma_values = kGridGamma;
  SmoOptions smo;
};

/// Exhaustive grid with stratified, seeded k-fold cross-validation. The best
/// mean accuracy wins; ties go to the smaller C, then the smaller gamma.
GridSearchResult svm_grid_search(const Matrix& x, std::span<const int> labels, std::size_t folds,
                                 std::uint64_t seed, const GridSearchOptions& options = {});

/// Stratified fold assignment (fold index per row).
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

}  // namespace feedread::svm
