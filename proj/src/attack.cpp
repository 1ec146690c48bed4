#include "feedread/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "feedread/csv.hpp"

namespace feedread::attack {

namespace {

enum SeedStream : std::uint64_t { kSubsample = 1, kFolds = 2, kSvmOrder = 3, kSources = 4 };

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void AttackConfig::validate(std::size_t dim) const {
  if (max_iters < 1) throw InvalidArgument("attack max_iters must be at least 1");
  if (!(step_size >= 0.0)) throw InvalidArgument("attack step size must be >= 0");
  if (plateau_window < 1) throw InvalidArgument("attack plateau window must be at least 1");
  if (feature_bounds.size() != dim) {
    throw InvalidArgument("attack has " + std::to_string(feature_bounds.size()) + " feature bounds for " +
                          std::to_string(dim) + " features");
  }
  for (const auto& b : feature_bounds) {
    if (!(b.lo <= b.hi)) throw InvalidArgument("attack feature bound has lo > hi");
  }
}

AdversarialExample evasion_attack(const svm::RbfSvmModel& model, std::span<const double> x0, double y0,
                                  const AttackConfig& cfg) {
  cfg.validate(x0.size());
  for (std::size_t j = 0; j < x0.size(); ++j) {
    if (x0[j] < cfg.feature_bounds[j].lo || x0[j] > cfg.feature_bounds[j].hi) {
      throw InvalidArgument("attack start point lies outside the feature bounds (feature " + std::to_string(j) + ")");
    }
  }

  AdversarialExample ex;
  ex.x_src.assign(x0.begin(), x0.end());
  ex.y_src = y0;
  ex.x_adv = ex.x_src;

  const double f0 = svm::svm_decision(model, x0);
  const int start_class = f0 > 0.0 ? 1 : 0;
  const double direction = f0 > 0.0 ? 1.0 : -1.0;  // descend a positive decision, ascend a negative one
  double f_prev = f0;
  std::size_t flat_steps = 0;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const svm::Vector g = svm::svm_gradient(model, ex.x_adv);
    const double norm = g.norm();
    const double scale = norm > 0.0 ? cfg.step_size * direction / norm : 0.0;
    for (std::size_t j = 0; j < ex.x_adv.size(); ++j) {
      const double moved = ex.x_adv[j] - scale * g(static_cast<Eigen::Index>(j));
      ex.x_adv[j] = std::clamp(moved, cfg.feature_bounds[j].lo, cfg.feature_bounds[j].hi);
    }
    ex.iters_used = it + 1;
    const double f = svm::svm_decision(model, ex.x_adv);
    flat_steps = std::abs(f - f_prev) < cfg.plateau_tol ? flat_steps + 1 : 0;
    f_prev = f;
    if (flat_steps >= cfg.plateau_window) break;
  }
  ex.surrogate_flip = (f_prev > 0.0 ? 1 : 0) != start_class;
  return ex;
}

FeederResult feeder_generate(const data::EncodedDataset& train, std::size_t n_points, const FeederConfig& cfg,
                             std::uint64_t seed) {
  if (n_points < 1) throw InvalidArgument("feeder needs at least one point to generate");
  if (train.rows() == 0) throw InvalidArgument("feeder needs a non-empty training set");
  cfg.attack.validate(train.dim());

  const std::vector<int> labels = train.target_binary();
  std::vector<std::size_t> fit_rows(train.rows());
  std::iota(fit_rows.begin(), fit_rows.end(), std::size_t{0});
  if (cfg.surrogate_max_samples > 0 && fit_rows.size() > cfg.surrogate_max_samples) {
    std::mt19937_64 rng(derive_seed(seed, kSubsample, 0));
    std::shuffle(fit_rows.begin(), fit_rows.end(), rng);
    fit_rows.resize(cfg.surrogate_max_samples);
    std::sort(fit_rows.begin(), fit_rows.end());
  }
  svm::Matrix x_fit(static_cast<Eigen::Index>(fit_rows.size()), train.x.cols());
  std::vector<int> y_fit(fit_rows.size());
  for (std::size_t i = 0; i < fit_rows.size(); ++i) {
    x_fit.row(static_cast<Eigen::Index>(i)) = train.x.row(static_cast<Eigen::Index>(fit_rows[i]));
    y_fit[i] = labels[fit_rows[i]];
  }

  FeederResult result;
  double c = 0.0, gamma = 0.0;
  if (cfg.fixed_hyperparameters) {
    std::tie(c, gamma) = *cfg.fixed_hyperparameters;
  } else {
    result.grid = svm::svm_grid_search(x_fit, y_fit, cfg.cv_folds, derive_seed(seed, kFolds, 0), cfg.grid);
    c = result.grid->best_c;
    gamma = result.grid->best_gamma;
  }
  result.surrogate = svm::svm_train(x_fit, y_fit, c, gamma, derive_seed(seed, kSvmOrder, 0), cfg.grid.smo);

  std::mt19937_64 rng(derive_seed(seed, kSources, 0));
  std::uniform_int_distribution<std::size_t> pick(0, train.rows() - 1);
  std::vector<double> row(train.dim());
  for (std::size_t k = 0; k < n_points; ++k) {
    const std::size_t src = pick(rng);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = train.x(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(j));
    AdversarialExample ex = evasion_attack(result.surrogate, row, train.target(static_cast<Eigen::Index>(src)), cfg.attack);
    ex.source_index = src;
    result.examples.push_back(std::move(ex));
  }
  return result;
}

void write_adversarial_csv(const std::vector<AdversarialExample>& examples,
                           const std::vector<std::string>& feature_names, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  std::vector<std::string> header = feature_names;
  header.insert(header.end(), {"y_src", "source_index", "surrogate_flip", "iters_used"});
  out << csv::join_row(header) << '\n';
  for (const auto& ex : examples) {
    std::vector<std::string> fields;
    for (double v : ex.x_adv) fields.push_back(format_double(v));
    fields.push_back(format_double(ex.y_src));
    fields.push_back(std::to_string(ex.source_index));
    fields.push_back(ex.surrogate_flip ? "1" : "0");
    fields.push_back(std::to_string(ex.iters_used));
    out << csv::join_row(fields) << '\n';
  }
}

}  // namespace feedread::attack
