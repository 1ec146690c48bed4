#include "feedread/framework.hpp"

#include <cmath>
#include <cstdio>

namespace feedread::framework {

namespace {

enum SeedStream : std::uint64_t { kShuffle = 11, kFeeder = 12 };

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* head_name(nn::HeadKind kind) {
  return kind == nn::HeadKind::SoftmaxClassifier ? "softmax" : "linear";
}

}  // namespace

void FrameworkConfig::validate() const {
  optimizer.validate();
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (points_per_iteration < 1) throw InvalidArgument("points per iteration must be at least 1");
  if (!(target_adv_fraction >= 0.0 && target_adv_fraction < 1.0)) {
    throw InvalidArgument("target adversarial fraction must lie in [0, 1)");
  }
  if (network.lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
  if (network.hidden_layers.empty()) throw InvalidArgument("network needs at least one hidden layer");
}

std::size_t planned_iterations(const FrameworkConfig& cfg, std::size_t n0) {
  const double needed = cfg.target_adv_fraction * static_cast<double>(n0);
  std::size_t k = 0;
  while (k < cfg.max_iterations && static_cast<double>(k * cfg.points_per_iteration) < needed - 1e-9) ++k;
  return k;
}

std::uint64_t network_seed(std::uint64_t base, std::size_t iteration) { return base ^ iteration; }
std::uint64_t shuffle_seed(std::uint64_t base, std::size_t iteration) { return derive_seed(base, kShuffle, iteration); }
std::uint64_t feeder_seed(std::uint64_t base, std::size_t iteration) { return derive_seed(base, kFeeder, iteration); }

nn::TrainingData training_data(const data::EncodedDataset& ds) { return {ds.x, ds.target, ds.a_vector()}; }

nn::TrainResult retrain_fresh(const data::EncodedDataset& train, const FrameworkConfig& cfg, std::size_t iteration) {
  if (train.rows() == 0) throw InvalidArgument("cannot retrain on an empty training set");
  nn::NetworkSpec spec = cfg.network;
  spec.input_dim = train.dim();
  nn::NetworkState state = nn::init_network(spec, network_seed(cfg.seed, iteration));
  return nn::train_reader(std::move(state), training_data(train), cfg.optimizer, cfg.epochs, cfg.batch_size,
                          shuffle_seed(cfg.seed, iteration));
}

metrics::PredictionSet predict(const nn::NetworkState& state, const data::EncodedDataset& ds) {
  const nn::ForwardTrace trace = nn::forward(state, ds.x);
  metrics::PredictionSet p;
  p.y = ds.label;
  p.a = ds.a;
  std::vector<double> scores(ds.rows());
  p.y_hat.resize(ds.rows());
  const bool classifier = state.spec.target_head == nn::HeadKind::SoftmaxClassifier;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (classifier) {
      scores[i] = trace.y_out(r, 1);
      p.y_hat[i] = trace.y_out(r, 1) > trace.y_out(r, 0) ? 1 : 0;
    } else {
      scores[i] = trace.y_out(r, 0);
      p.y_hat[i] = scores[i] > ds.encoder.regression_threshold ? 1 : 0;
    }
  }
  p.scores = std::move(scores);
  return p;
}

metrics::FairnessReport evaluate_model(const nn::NetworkState& state, const data::EncodedDataset& ds,
                                       const metrics::FairnessThresholds& thresholds) {
  return metrics::evaluate(predict(state, ds), thresholds);
}

data::EncodedDataset append_adversarial(const data::EncodedDataset& base,
                                        const std::vector<attack::AdversarialExample>& examples) {
  data::EncodedDataset out;
  out.encoder = base.encoder;
  out.bounds = base.bounds;
  const auto n0 = static_cast<Eigen::Index>(base.rows());
  const auto m = static_cast<Eigen::Index>(examples.size());
  out.x.resize(n0 + m, base.x.cols());
  out.x.topRows(n0) = base.x;
  out.target.resize(n0 + m);
  out.target.head(n0) = base.target;
  out.label = base.label;
  out.a = base.a;
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& ex = examples[static_cast<std::size_t>(k)];
    if (ex.source_index >= base.rows()) throw InvalidArgument("adversarial example refers to a missing source row");
    if (ex.x_adv.size() != base.dim()) throw InvalidArgument("adversarial example has the wrong dimension");
    for (Eigen::Index j = 0; j < base.x.cols(); ++j) out.x(n0 + k, j) = ex.x_adv[static_cast<std::size_t>(j)];
    out.target(n0 + k) = base.target(static_cast<Eigen::Index>(ex.source_index));
    out.label.push_back(base.label[ex.source_index]);
    out.a.push_back(base.a[ex.source_index]);
  }
  return out;
}

RunHistory run(const data::EncodedDataset& train, const data::EncodedDataset& test, FrameworkConfig cfg,
               const IterationObserver& observer) {
  cfg.validate();
  if (train.rows() == 0 || test.rows() == 0) throw InvalidArgument("framework needs non-empty train and test sets");
  if (train.dim() != test.dim()) throw InvalidArgument("train and test sets have different encodings");
  if (cfg.network.input_dim != 0 && cfg.network.input_dim != train.dim()) {
    throw InvalidArgument("network input width does not match the data");
  }
  cfg.network.input_dim = train.dim();
  if (cfg.feeder.attack.feature_bounds.empty()) cfg.feeder.attack.feature_bounds = train.bounds;

  RunHistory history;
  history.config = cfg;
  const std::size_t n0 = train.rows();
  const std::size_t iterations = planned_iterations(cfg, n0);
  data::EncodedDataset current = train;

  for (std::size_t k = 0; k <= iterations; ++k) {
    IterationRecord record;
    record.iteration = k;
    if (k > 0) {
      attack::FeederResult fed =
          attack::feeder_generate(current, cfg.points_per_iteration, cfg.feeder, feeder_seed(cfg.seed, k));
      std::size_t flips = 0;
      for (const auto& ex : fed.examples) flips += ex.surrogate_flip ? 1 : 0;
      record.surrogate_c = fed.surrogate.c;
      record.surrogate_gamma = fed.surrogate.gamma;
      record.surrogate_flip_rate = static_cast<double>(flips) / static_cast<double>(fed.examples.size());
      current = append_adversarial(current, fed.examples);
    }
    nn::TrainResult trained = retrain_fresh(current, cfg, k);
    record.train_size = current.rows();
    record.adv_points = current.rows() - n0;
    record.adv_fraction = static_cast<double>(record.adv_points) / static_cast<double>(n0);
    record.final_train_loss = trained.epoch_losses.empty() ? 0.0 : trained.epoch_losses.back();
    record.report = evaluate_model(trained.state, test, cfg.thresholds);
    if (observer) observer(record, trained.state);
    history.records.push_back(std::move(record));
    history.final_state = std::move(trained.state);
  }
  return history;
}

nlohmann::json config_to_json(const FrameworkConfig& cfg) {
  nlohmann::json j;
  j["network"] = {{"input_dim", cfg.network.input_dim},
                  {"hidden_layers", cfg.network.hidden_layers},
                  {"activation", "relu"},
                  {"target_head", head_name(cfg.network.target_head)},
                  {"adversary_head", head_name(cfg.network.adversary_head)},
                  {"lambda", cfg.network.lambda}};
  j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"epsilon_hat", cfg.optimizer.epsilon_hat},
                    {"plateau_factor", cfg.optimizer.plateau_factor},
                    {"plateau_patience", cfg.optimizer.plateau_patience},
                    {"plateau_min_delta", cfg.optimizer.plateau_min_delta},
                    {"plateau_metric", "train_loss"}};
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["points_per_iteration"] = cfg.points_per_iteration;
  j["target_adv_fraction"] = cfg.target_adv_fraction;
  j["max_iterations"] = cfg.max_iterations;
  j["attack"] = {{"step_size", cfg.feeder.attack.step_size},
                 {"max_iters", cfg.feeder.attack.max_iters},
                 {"plateau_tol", cfg.feeder.attack.plateau_tol},
                 {"plateau_window", cfg.feeder.attack.plateau_window}};
  j["feeder"] = {{"cv_folds", cfg.feeder.cv_folds},
                 {"surrogate_max_samples", cfg.feeder.surrogate_max_samples},
                 {"smo_tolerance", cfg.feeder.grid.smo.tolerance}};
  if (cfg.feeder.fixed_hyperparameters) {
    j["feeder"]["fixed_c"] = cfg.feeder.fixed_hyperparameters->first;
    j["feeder"]["fixed_gamma"] = cfg.feeder.fixed_hyperparameters->second;
  }
  j["thresholds"] = {{"epsilon", cfg.thresholds.epsilon}, {"tau", cfg.thresholds.tau}, {"nu", cfg.thresholds.nu}};
  j["seed"] = cfg.seed;
  return j;
}

nlohmann::json history_to_json(const RunHistory& history) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : history.records) {
    nlohmann::json jr{{"iteration", r.iteration},
                      {"train_size", r.train_size},
                      {"adv_points", r.adv_points},
                      {"adv_fraction", r.adv_fraction},
                      {"final_train_loss", r.final_train_loss},
                      {"report", metrics::report_to_json(r.report)}};
    if (r.surrogate_c) jr["surrogate_c"] = *r.surrogate_c;
    if (r.surrogate_gamma) jr["surrogate_gamma"] = *r.surrogate_gamma;
    if (r.surrogate_flip_rate) jr["surrogate_flip_rate"] = *r.surrogate_flip_rate;
    records.push_back(std::move(jr));
  }
  return {{"config", config_to_json(history.config)}, {"records", std::move(records)}};
}

std::string history_csv_header() {
  return "iteration,train_size,adv_points,adv_fraction,acc,f1,dp,dpr,eo,auc,surrogate_c,surrogate_gamma,flip_rate";
}

std::string history_csv_row(const IterationRecord& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
  std::string row = std::to_string(r.iteration) + "," + std::to_string(r.train_size) + "," +
                    std::to_string(r.adv_points) + "," + metrics::format_metric(r.adv_fraction);
  for (const auto& v : {std::optional<double>(r.report.accuracy), std::optional<double>(r.report.f1_macro),
                        r.report.dp, r.report.dpr, r.report.eo, r.report.auc}) {
    row += "," + metrics::format_metric(v);
  }
  row += "," + opt(r.surrogate_c) + "," + opt(r.surrogate_gamma) + "," +
         (r.surrogate_flip_rate ? metrics::format_metric(*r.surrogate_flip_rate) : std::string());
  return row;
}

}  // namespace feedread::framework
