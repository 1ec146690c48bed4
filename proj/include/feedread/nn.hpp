#pragma once

// Feed-forward network with a shared ReLU trunk and two linear heads: the
// target head h_y and the adversary head h_a. The adversary head is attached
// to the last hidden layer through a gradient reversal layer (identity on the
// forward pass, multiplies the upstream gradient by -lambda on the way back).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "feedread/common.hpp"

namespace feedread::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { ReLU };
enum class HeadKind { SoftmaxClassifier, LinearRegressor };

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_layers;
  Activation activation = Activation::ReLU;
  HeadKind target_head = HeadKind::SoftmaxClassifier;
  HeadKind adversary_head = HeadKind::SoftmaxClassifier;
  double lambda = 0.0;

  /// Throws InvalidArgument on an empty/zero-width trunk, zero input or negative lambda.
  void validate() const;
  std::size_t target_outputs() const { return target_head == HeadKind::SoftmaxClassifier ? 2 : 1; }
  std::size_t adversary_outputs() const { return 2; }
};

/// Affine layer; `weight` is out x in.
struct Dense {
  Matrix weight;
  Vector bias;
};

/// Parameters (or same-shaped gradients / moment buffers) of the whole network.
struct LayerSet {
  std::vector<Dense> shared;
  Dense target_head;
  Dense adversary_head;

  LayerSet zeros_like() const;
  bool all_finite() const;
  /// Layers in canonical order: shared trunk, target head, adversary head.
  std::vector<Dense*> layers();
  std::vector<const Dense*> layers() const;
};

using GradientSet = LayerSet;

struct AdamState {
  LayerSet first_moment;
  LayerSet second_moment;
  std::uint64_t step = 0;
};

struct NetworkState {
  NetworkSpec spec;
  LayerSet params;
  AdamState adam;
};

enum class PlateauMetric { TrainLoss };

struct OptimizerConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.9999;
  double epsilon_hat = 1e-8;
  double plateau_factor = 0.1;
  std::size_t plateau_patience = 10;
  double plateau_min_delta = 1e-4;
  PlateauMetric plateau_metric = PlateauMetric::TrainLoss;

  void validate() const;
};

/// Activations of one forward pass over a batch (one example per row).
struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre_activations;  // per hidden layer
  std::vector<Matrix> activations;      // per hidden layer, after ReLU
  Matrix y_out;  // class probabilities (softmax) or raw score (regressor)
  Matrix a_out;  // adversary class probabilities

  const Matrix& last_hidden() const { return activations.back(); }
  std::size_t batch_size() const { return static_cast<std::size_t>(input.rows()); }
};

struct LossTerms {
  double target = 0.0;     // E: BCE or MSE, batch mean
  double adversary = 0.0;  // D: BCE of the adversary head, batch mean
};

/// Gradient of the target and adversary branches kept apart. `adversary.shared`
/// holds what reaches the trunk through the reversal layer.
struct BranchGradients {
  GradientSet target;
  GradientSet adversary;
};

/// How the adversary gradient crosses into the trunk.
enum class GradientFlow { Reversed, Identity };

inline constexpr double kProbabilityClamp = 1e-12;

NetworkState init_network(const NetworkSpec& spec, std::uint64_t seed);

/// Batch forward pass; `x` is n x input_dim.
ForwardTrace forward(const NetworkState& state, const Matrix& x);
/// Single-example forward pass.
ForwardTrace forward(const NetworkState& state, std::span<const double> x);

/// Gradient reversal: identity forward, -lambda * upstream backward.
Matrix reverse_gradient(const Matrix& upstream, double lambda);

LossTerms loss_terms(const NetworkSpec& spec, const ForwardTrace& trace, const Vector& y, const Vector& a);
/// L = E - lambda * D.
double joint_loss(const NetworkSpec& spec, const ForwardTrace& trace, const Vector& y, const Vector& a, double lambda);

BranchGradients backward_branches(const NetworkState& state, const ForwardTrace& trace, const Vector& y,
                                  const Vector& a, double lambda, GradientFlow flow = GradientFlow::Reversed);
/// Gradients used by the optimiser: the trunk receives dE - lambda * dD, the
/// adversary head dD and the target head dE.
GradientSet backward(const NetworkState& state, const ForwardTrace& trace, const Vector& y, const Vector& a,
                     double lambda);

/// One Adam step with bias correction at `learning_rate`.
void adam_step(NetworkState& state, const GradientSet& grads, const OptimizerConfig& cfg, double learning_rate);
inline void adam_step(NetworkState& state, const GradientSet& grads, const OptimizerConfig& cfg) {
  adam_step(state, grads, cfg, cfg.learning_rate);
}

/// Reduce-on-plateau. `history` holds the epochs since the last reduction.
/// An epoch improves when its value is <= best - min_delta.
double lr_on_plateau(std::span<const double> history, double current_lr, const OptimizerConfig& cfg);

struct TrainingData {
  Matrix x;
  Vector y;  // class index (0/1) or regression score
  Vector a;  // protected attribute, 0/1
};

struct TrainResult {
  NetworkState state;
  std::vector<double> epoch_losses;  // mean joint loss per epoch
  std::vector<double> learning_rates;  // rate in effect during each epoch
};

TrainResult train_reader(NetworkState state, const TrainingData& data, const OptimizerConfig& cfg,
                         std::size_t epochs, std::size_t batch_size, std::uint64_t seed);

}  // namespace feedread::nn
