#include "feedread/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace feedread::svm {

namespace {

constexpr double kTau = 1e-12;

Matrix squared_distances(const Matrix& x) {
  const Vector norms = x.rowwise().squaredNorm();
  Matrix d = -2.0 * (x * x.transpose());
  d.colwise() += norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

Matrix rbf_from_distances(const Matrix& sq, double gamma) { return (-gamma * sq.array()).exp().matrix(); }

std::vector<int> to_signed(std::span<const int> labels) {
  std::vector<int> s(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("SVM labels must be 0 or 1");
    s[i] = labels[i] == 1 ? 1 : -1;
  }
  return s;
}

bool has_both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int l : labels) (l == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

DualSolution solve_dual(const Matrix& kernel, std::span<const int> y, double c, const SmoOptions& options) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (kernel.rows() != n || kernel.cols() != n) throw InvalidArgument("kernel matrix does not match label count");
  if (!(c > 0.0)) throw InvalidArgument("SVM box constraint C must be positive");

  DualSolution sol;
  sol.alpha = Vector::Zero(n);
  Vector& alpha = sol.alpha;
  // Gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
  Vector grad = Vector::Constant(n, -1.0);

  auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };
  auto in_up = [&](Eigen::Index t) { return y[t] == 1 ? !upper(t) : !lower(t); };
  auto in_low = [&](Eigen::Index t) { return y[t] == 1 ? !lower(t) : !upper(t); };

  for (; sol.iterations < options.max_iterations; ++sol.iterations) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y[t] * grad(t);
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || g_max - g_min < options.tolerance) break;

    const double q_ii = kernel(i, i), q_jj = kernel(j, j);
    const double q_ij = y[i] * y[j] * kernel(i, j);
    const double old_i = alpha(i), old_j = alpha(j);

    // Two-variable subproblem with box clipping.
    if (y[i] != y[j]) {
      double quad = q_ii + q_jj + 2.0 * q_ij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = q_ii + q_jj - 2.0 * q_ij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }

    const double d_i = (alpha(i) - old_i) * y[i];
    const double d_j = (alpha(j) - old_j) * y[j];
    for (Eigen::Index t = 0; t < n; ++t) {
      grad(t) += y[t] * (kernel(t, i) * d_i + kernel(t, j) * d_j);
    }
  }

  // Bias from the free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad(t);
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;
  sol.bias = -rho;
  return sol;
}

RbfSvmModel svm_train(const Matrix& x, std::span<const int> labels, double c, double gamma, std::uint64_t seed,
                      const SmoOptions& options) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw InvalidArgument("SVM label count does not match rows");
  if (n < 2 || !has_both_classes(labels)) throw InvalidArgument("SVM training needs at least one example of each class");
  if (!(gamma > 0.0)) throw InvalidArgument("RBF gamma must be positive");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Matrix xs(x.rows(), x.cols());
  std::vector<int> ys(n);
  const std::vector<int> signed_labels = to_signed(labels);
  for (std::size_t r = 0; r < n; ++r) {
    xs.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(order[r]));
    ys[r] = signed_labels[order[r]];
  }
  const DualSolution sol = solve_dual(rbf_from_distances(squared_distances(xs), gamma), ys, c, options);

  RbfSvmModel model;
  model.gamma = gamma;
  model.c = c;
  model.bias = sol.bias;
  std::vector<Eigen::Index> support;
  for (Eigen::Index t = 0; t < sol.alpha.size(); ++t) {
    if (sol.alpha(t) > 0.0) support.push_back(t);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), x.cols());
  model.dual_coefs.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    model.support_vectors.row(row) = xs.row(support[k]);
    model.dual_coefs(row) = sol.alpha(support[k]) * ys[static_cast<std::size_t>(support[k])];
  }
  return model;
}

double svm_decision(const RbfSvmModel& model, std::span<const double> x) {
  if (x.size() != model.dimension() && model.support_vectors.rows() > 0) {
    throw InvalidArgument("input dimension does not match the SVM");
  }
  const Eigen::Map<const Vector> point(x.data(), static_cast<Eigen::Index>(x.size()));
  double f = model.bias;
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i) {
    const double sq = (model.support_vectors.row(i).transpose() - point).squaredNorm();
    f += model.dual_coefs(i) * std::exp(-model.gamma * sq);
  }
  return f;
}

Vector svm_gradient(const RbfSvmModel& model, std::span<const double> x) {
  if (x.size() != model.dimension() && model.support_vectors.rows() > 0) {
    throw InvalidArgument("input dimension does not match the SVM");
  }
  const Eigen::Map<const Vector> point(x.data(), static_cast<Eigen::Index>(x.size()));
  Vector g = Vector::Zero(static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i) {
    const Vector diff = point - model.support_vectors.row(i).transpose();
    const double k = std::exp(-model.gamma * diff.squaredNorm());
    g += (model.dual_coefs(i) * k * -2.0 * model.gamma) * diff;
  }
  return g;
}

int svm_predict(const RbfSvmModel& model, std::span<const double> x) { return svm_decision(model, x) > 0.0 ? 1 : 0; }

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
  if (labels.size() < folds) throw InvalidArgument("fewer examples than folds");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> assignment(labels.size());
  std::size_t next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    // Continue dealing where the previous class stopped so fold sizes stay balanced.
    for (std::size_t idx : members) assignment[idx] = next++ % folds;
  }
  return assignment;
}

GridSearchResult svm_grid_search(const Matrix& x, std::span<const int> labels, std::size_t folds,
                                 std::uint64_t seed, const GridSearchOptions& options) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw InvalidArgument("SVM label count does not match rows");
  if (options.c_values.empty() || options.gamma_values.empty()) throw InvalidArgument("empty hyper-parameter grid");
  const std::vector<std::size_t> fold_of = stratified_folds(labels, folds, seed);
  const std::vector<int> signed_labels = to_signed(labels);
  const Matrix sq = squared_distances(x);

  struct Fold {
    std::vector<Eigen::Index> train, test;
    std::vector<int> train_labels;
  };
  std::vector<Fold> split(folds);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      if (fold_of[i] == f) {
        split[f].test.push_back(static_cast<Eigen::Index>(i));
      } else {
        split[f].train.push_back(static_cast<Eigen::Index>(i));
        split[f].train_labels.push_back(signed_labels[i]);
      }
    }
  }

  std::vector<double> c_values = options.c_values, gamma_values = options.gamma_values;
  std::sort(c_values.begin(), c_values.end());
  std::sort(gamma_values.begin(), gamma_values.end());

  GridSearchResult result;
  result.table.reserve(c_values.size() * gamma_values.size());
  for (double c : c_values) {
    for (double gamma : gamma_values) result.table.push_back(GridCell{c, gamma, 0.0, {}});
  }

  for (std::size_t gi = 0; gi < gamma_values.size(); ++gi) {
    const Matrix kernel = rbf_from_distances(sq, gamma_values[gi]);
    for (const Fold& fold : split) {
      if (fold.test.empty()) continue;
      const bool single_class = std::all_of(fold.train_labels.begin(), fold.train_labels.end(),
                                            [&](int l) { return l == fold.train_labels.front(); });
      const Matrix sub = single_class ? Matrix() : Matrix(kernel(fold.train, fold.train));
      const Matrix cross = single_class ? Matrix() : Matrix(kernel(fold.test, fold.train));
      for (std::size_t ci = 0; ci < c_values.size(); ++ci) {
        GridCell& cell = result.table[ci * gamma_values.size() + gi];
        std::size_t correct = 0;
        if (single_class) {
          const int constant = fold.train_labels.front() == 1 ? 1 : 0;
          for (Eigen::Index t : fold.test) correct += labels[static_cast<std::size_t>(t)] == constant;
        } else {
          const DualSolution sol = solve_dual(sub, fold.train_labels, c_values[ci], options.smo);
          Vector coef(static_cast<Eigen::Index>(fold.train.size()));
          for (std::size_t k = 0; k < fold.train.size(); ++k) {
            coef(static_cast<Eigen::Index>(k)) = sol.alpha(static_cast<Eigen::Index>(k)) * fold.train_labels[k];
          }
          const Vector f = (cross * coef).array() + sol.bias;
          for (std::size_t t = 0; t < fold.test.size(); ++t) {
            correct += (f(static_cast<Eigen::Index>(t)) > 0.0 ? 1 : 0) == labels[static_cast<std::size_t>(fold.test[t])];
          }
        }
        cell.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(fold.test.size()));
      }
    }
  }
  for (GridCell& cell : result.table) {
    double total = 0.0;
    for (double acc : cell.fold_accuracy) total += acc;
    cell.mean_accuracy = total / static_cast<double>(cell.fold_accuracy.size());
  }

  const GridCell* best = &result.table.front();
  for (const GridCell& cell : result.table) {
    if (cell.mean_accuracy > best->mean_accuracy) best = &cell;
  }
  result.best_c = best->c;
  result.best_gamma = best->gamma;
  result.best_accuracy = best->mean_accuracy;
  return result;
}

}  // namespace feedread::svm
