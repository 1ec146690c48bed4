#include "feedread/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace feedread::nn {

namespace {

Dense zero_dense(Eigen::Index out, Eigen::Index in) {
  return Dense{Matrix::Zero(out, in), Vector::Zero(out)};
}

Dense glorot_dense(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Dense d = zero_dense(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  // Row-major draw order so the stream layout does not depend on Eigen storage.
  for (Eigen::Index r = 0; r < d.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.weight.cols(); ++c) d.weight(r, c) = dist(rng);
  }
  return d;
}

Matrix affine(const Matrix& in, const Dense& layer) {
  Matrix z = in * layer.weight.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      out(i, k) = std::exp(logits(i, k) - m);
      sum += out(i, k);
    }
    out.row(i) /= sum;
  }
  return out;
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double binary_cross_entropy(const Matrix& probs, const Vector& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double p = clamp_probability(probs(i, 1));
    total += labels(i) > 0.5 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.rows());
}

// d(mean cross-entropy)/d(logits) for a two-way softmax.
Matrix softmax_logit_gradient(const Matrix& probs, const Vector& labels) {
  Matrix g = probs;
  for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, labels(i) > 0.5 ? 1 : 0) -= 1.0;
  return g / static_cast<double>(g.rows());
}

Matrix target_output_gradient(const NetworkSpec& spec, const ForwardTrace& trace, const Vector& y) {
  if (spec.target_head == HeadKind::SoftmaxClassifier) return softmax_logit_gradient(trace.y_out, y);
  const double n = static_cast<double>(trace.y_out.rows());
  return (2.0 / n) * (trace.y_out.col(0) - y);
}

void head_gradient(Dense& out, const Matrix& upstream, const Matrix& hidden) {
  out.weight = upstream.transpose() * hidden;
  out.bias = upstream.colwise().sum().transpose();
}

// Backpropagates `upstream` (n x last width, gradient w.r.t. the last hidden
// activation) through the ReLU trunk.
std::vector<Dense> backprop_trunk(const NetworkState& state, const ForwardTrace& trace, Matrix upstream) {
  const std::size_t depth = state.params.shared.size();
  std::vector<Dense> grads(depth);
  for (std::size_t l = depth; l-- > 0;) {
    Matrix dz = upstream.cwiseProduct((trace.pre_activations[l].array() > 0.0).cast<double>().matrix());
    const Matrix& below = l == 0 ? trace.input : trace.activations[l - 1];
    grads[l].weight = dz.transpose() * below;
    grads[l].bias = dz.colwise().sum().transpose();
    if (l > 0) upstream = dz * state.params.shared[l].weight;
  }
  return grads;
}

void check_batch(const NetworkState& state, const ForwardTrace& trace, const Vector& y, const Vector& a) {
  const auto n = static_cast<Eigen::Index>(trace.batch_size());
  if (y.size() != n || a.size() != n) throw InvalidArgument("label vectors do not match the batch size");
  if (trace.activations.size() != state.params.shared.size()) {
    throw InvalidArgument("forward trace does not match the network depth");
  }
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_dim == 0) throw InvalidArgument("network input dimension must be at least 1");
  if (hidden_layers.empty()) throw InvalidArgument("network needs at least one hidden layer");
  for (std::size_t w : hidden_layers) {
    if (w == 0) throw InvalidArgument("hidden layer width must be at least 1");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be a finite value >= 0");
  if (adversary_head != HeadKind::SoftmaxClassifier) {
    throw InvalidArgument("adversary head must be a softmax classifier");
  }
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon_hat > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw InvalidArgument("plateau factor must lie in (0, 1)");
  if (plateau_min_delta < 0.0) throw InvalidArgument("plateau min-delta must be >= 0");
}

LayerSet LayerSet::zeros_like() const {
  LayerSet z;
  for (const Dense& d : shared) z.shared.push_back(zero_dense(d.weight.rows(), d.weight.cols()));
  z.target_head = zero_dense(target_head.weight.rows(), target_head.weight.cols());
  z.adversary_head = zero_dense(adversary_head.weight.rows(), adversary_head.weight.cols());
  return z;
}

std::vector<Dense*> LayerSet::layers() {
  std::vector<Dense*> out;
  for (Dense& d : shared) out.push_back(&d);
  out.push_back(&target_head);
  out.push_back(&adversary_head);
  return out;
}

std::vector<const Dense*> LayerSet::layers() const {
  std::vector<const Dense*> out;
  for (const Dense& d : shared) out.push_back(&d);
  out.push_back(&target_head);
  out.push_back(&adversary_head);
  return out;
}

bool LayerSet::all_finite() const {
  for (const Dense* d : layers()) {
    if (!d->weight.allFinite() || !d->bias.allFinite()) return false;
  }
  return true;
}

NetworkState init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  NetworkState state;
  state.spec = spec;
  std::size_t fan_in = spec.input_dim;
  for (std::size_t width : spec.hidden_layers) {
    state.params.shared.push_back(glorot_dense(width, fan_in, rng));
    fan_in = width;
  }
  state.params.target_head = glorot_dense(spec.target_outputs(), fan_in, rng);
  state.params.adversary_head = glorot_dense(spec.adversary_outputs(), fan_in, rng);
  state.adam.first_moment = state.params.zeros_like();
  state.adam.second_moment = state.params.zeros_like();
  return state;
}

ForwardTrace forward(const NetworkState& state, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != state.spec.input_dim) {
    throw InvalidArgument("input has " + std::to_string(x.cols()) + " features, network expects " +
                          std::to_string(state.spec.input_dim));
  }
  if (!x.allFinite()) throw InvalidArgument("input contains non-finite values");
  ForwardTrace t;
  t.input = x;
  const Matrix* below = &t.input;
  for (const Dense& layer : state.params.shared) {
    t.pre_activations.push_back(affine(*below, layer));
    t.activations.push_back(t.pre_activations.back().cwiseMax(0.0));
    below = &t.activations.back();
  }
  const Matrix& h = t.last_hidden();
  Matrix y_logits = affine(h, state.params.target_head);
  t.y_out = state.spec.target_head == HeadKind::SoftmaxClassifier ? softmax_rows(y_logits) : y_logits;
  // The reversal layer is the identity on the forward pass.
  t.a_out = softmax_rows(affine(h, state.params.adversary_head));
  return t;
}

ForwardTrace forward(const NetworkState& state, std::span<const double> x) {
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  return forward(state, row);
}

Matrix reverse_gradient(const Matrix& upstream, double lambda) { return -lambda * upstream; }

LossTerms loss_terms(const NetworkSpec& spec, const ForwardTrace& trace, const Vector& y, const Vector& a) {
  const auto n = static_cast<Eigen::Index>(trace.batch_size());
  if (n == 0) throw InvalidArgument("empty batch");
  if (y.size() != n || a.size() != n) throw InvalidArgument("label vectors do not match the batch size");
  LossTerms terms;
  if (spec.target_head == HeadKind::SoftmaxClassifier) {
    terms.target = binary_cross_entropy(trace.y_out, y);
  } else {
    terms.target = (trace.y_out.col(0) - y).squaredNorm() / static_cast<double>(n);
  }
  terms.adversary = binary_cross_entropy(trace.a_out, a);
  return terms;
}

double joint_loss(const NetworkSpec& spec, const ForwardTrace& trace, const Vector& y, const Vector& a,
                  double lambda) {
  const LossTerms t = loss_terms(spec, trace, y, a);
  return t.target - lambda * t.adversary;
}

BranchGradients backward_branches(const NetworkState& state, const ForwardTrace& trace, const Vector& y,
                                  const Vector& a, double lambda, GradientFlow flow) {
  check_batch(state, trace, y, a);
  const Matrix& h = trace.last_hidden();
  const Matrix d_target = target_output_gradient(state.spec, trace, y);
  const Matrix d_adversary = softmax_logit_gradient(trace.a_out, a);

  BranchGradients out{state.params.zeros_like(), state.params.zeros_like()};
  head_gradient(out.target.target_head, d_target, h);
  head_gradient(out.adversary.adversary_head, d_adversary, h);

  out.target.shared = backprop_trunk(state, trace, d_target * state.params.target_head.weight);
  Matrix through_grl = d_adversary * state.params.adversary_head.weight;
  if (flow == GradientFlow::Reversed) through_grl = reverse_gradient(through_grl, lambda);
  out.adversary.shared = backprop_trunk(state, trace, through_grl);
  return out;
}

GradientSet backward(const NetworkState& state, const ForwardTrace& trace, const Vector& y, const Vector& a,
                     double lambda) {
  check_batch(state, trace, y, a);
  const Matrix& h = trace.last_hidden();
  const Matrix d_target = target_output_gradient(state.spec, trace, y);
  const Matrix d_adversary = softmax_logit_gradient(trace.a_out, a);

  GradientSet g;
  head_gradient(g.target_head, d_target, h);
  head_gradient(g.adversary_head, d_adversary, h);
  Matrix upstream = d_target * state.params.target_head.weight +
                    reverse_gradient(d_adversary * state.params.adversary_head.weight, lambda);
  g.shared = backprop_trunk(state, trace, std::move(upstream));
  return g;
}

void adam_step(NetworkState& state, const GradientSet& grads, const OptimizerConfig& cfg, double learning_rate) {
  auto params = state.params.layers();
  auto g = grads.layers();
  auto m = state.adam.first_moment.layers();
  auto v = state.adam.second_moment.layers();
  if (params.size() != g.size()) throw InvalidArgument("gradient set does not match the network");

  state.adam.step += 1;
  const double t = static_cast<double>(state.adam.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](auto& p, const auto& grad, auto& m1, auto& m2) {
    if (p.rows() != grad.rows() || p.cols() != grad.cols()) {
      throw InvalidArgument("gradient tensor shape does not match parameter");
    }
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const auto m_hat = m1.array() / correction1;
    const auto v_hat = m2.array() / correction2;
    p.array() -= learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon_hat);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i]->weight, g[i]->weight, m[i]->weight, v[i]->weight);
    update(params[i]->bias, g[i]->bias, m[i]->bias, v[i]->bias);
  }
  if (!state.params.all_finite()) throw NumericalError("non-finite parameter after Adam step");
}

double lr_on_plateau(std::span<const double> history, double current_lr, const OptimizerConfig& cfg) {
  if (history.empty()) return current_lr;
  double best = history.front();
  std::size_t stale = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] <= best - cfg.plateau_min_delta) {
      best = history[i];
      stale = 0;
    } else {
      ++stale;
    }
  }
  return stale >= cfg.plateau_patience ? current_lr * cfg.plateau_factor : current_lr;
}

TrainResult train_reader(NetworkState state, const TrainingData& data, const OptimizerConfig& cfg,
                         std::size_t epochs, std::size_t batch_size, std::uint64_t seed) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(data.x.rows());
  if (n == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (batch_size == 0) throw InvalidArgument("batch size must be at least 1");
  if (static_cast<std::size_t>(data.y.size()) != n || static_cast<std::size_t>(data.a.size()) != n) {
    throw InvalidArgument("training labels do not match the number of rows");
  }

  TrainResult result;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double lr = cfg.learning_rate;
  std::size_t since_reduction = 0;
  const double lambda = state.spec.lambda;
  const auto d = data.x.cols();

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      const auto m = static_cast<Eigen::Index>(stop - start);
      Matrix xb(m, d);
      Vector yb(m), ab(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
        xb.row(r) = data.x.row(src);
        yb(r) = data.y(src);
        ab(r) = data.a(src);
      }
      const ForwardTrace trace = forward(state, xb);
      loss_sum += joint_loss(state.spec, trace, yb, ab, lambda) * static_cast<double>(m);
      adam_step(state, backward(state, trace, yb, ab, lambda), cfg, lr);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(n));
    result.learning_rates.push_back(lr);

    const std::span<const double> window(result.epoch_losses.data() + (result.epoch_losses.size() - since_reduction - 1),
                                         since_reduction + 1);
    const double next = lr_on_plateau(window, lr, cfg);
    if (next != lr) {
      lr = next;
      since_reduction = 0;
    } else {
      ++since_reduction;
    }
  }
  result.state = std::move(state);
  return result;
}

}  // namespace feedread::nn
