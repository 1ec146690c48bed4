#include "feedread/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "feedread/csv.hpp"
#include "feedread/metrics.hpp"

namespace feedread::audit {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

RepresentationDump extract_representations(const nn::NetworkState& state, const data::EncodedDataset& ds,
                                           std::string model_tag, std::string split_tag) {
  const nn::ForwardTrace trace = nn::forward(state, ds.x);
  RepresentationDump dump;
  dump.h = trace.last_hidden();
  dump.a = ds.a;
  dump.adversary_scores.resize(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) dump.adversary_scores[i] = trace.a_out(static_cast<Eigen::Index>(i), 1);
  dump.model_tag = std::move(model_tag);
  dump.split_tag = std::move(split_tag);
  return dump;
}

ProbeReport train_probe(const RepresentationDump& dump, std::uint64_t seed, const ProbeConfig& cfg) {
  if (dump.a.size() != dump.rows() || dump.adversary_scores.size() != dump.rows()) {
    throw InvalidArgument("representation dump has inconsistent row counts");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw InvalidArgument("probe needs at least one epoch and batch row");
  ProbeReport report;
  report.model_tag = dump.model_tag;
  const auto positives = std::count(dump.a.begin(), dump.a.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(dump.rows())) return report;

  const data::Split split = data::stratified_split(dump.a, dump.a, cfg.eval_fraction, seed);
  report.train_rows = split.train.size();
  report.eval_rows = split.test.size();
  const auto width = dump.h.cols();

  Vector mean = Vector::Zero(width), scale = Vector::Ones(width);
  for (auto i : split.train) mean += dump.h.row(static_cast<Eigen::Index>(i)).transpose();
  mean /= static_cast<double>(split.train.size());
  Vector var = Vector::Zero(width);
  for (auto i : split.train) var += (dump.h.row(static_cast<Eigen::Index>(i)).transpose() - mean).array().square().matrix();
  var /= static_cast<double>(split.train.size());
  for (Eigen::Index j = 0; j < width; ++j) scale(j) = var(j) > 0.0 ? std::sqrt(var(j)) : 1.0;
  const auto standardized = [&](std::size_t row) {
    return Vector(((dump.h.row(static_cast<Eigen::Index>(row)).transpose() - mean).array() / scale.array()).matrix());
  };

  Vector w = Vector::Zero(width);
  double b = 0.0;
  Vector m_w = Vector::Zero(width), v_w = Vector::Zero(width);
  double m_b = 0.0, v_b = 0.0;
  const auto& opt = cfg.optimizer;
  std::uint64_t step = 0;
  std::mt19937_64 rng(derive_seed(seed, 1, 0));
  std::vector<std::size_t> order = split.train;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Vector g_w = Vector::Zero(width);
      double g_b = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const Vector x = standardized(order[k]);
        const double err = sigmoid(w.dot(x) + b) - dump.a[order[k]];
        g_w += err * x;
        g_b += err;
      }
      const double m = static_cast<double>(stop - start);
      g_w /= m;
      g_b /= m;
      ++step;
      const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
      m_w = opt.beta1 * m_w + (1.0 - opt.beta1) * g_w;
      v_w = opt.beta2 * v_w + (1.0 - opt.beta2) * g_w.cwiseProduct(g_w);
      m_b = opt.beta1 * m_b + (1.0 - opt.beta1) * g_b;
      v_b = opt.beta2 * v_b + (1.0 - opt.beta2) * g_b * g_b;
      w.array() -= opt.learning_rate * (m_w.array() / c1) / ((v_w.array() / c2).sqrt() + opt.epsilon_hat);
      b -= opt.learning_rate * (m_b / c1) / (std::sqrt(v_b / c2) + opt.epsilon_hat);
    }
  }

  std::vector<double> probe_scores, branch_scores;
  std::vector<int> labels;
  for (auto i : split.test) {
    probe_scores.push_back(sigmoid(w.dot(standardized(i)) + b));
    branch_scores.push_back(dump.adversary_scores[i]);
    labels.push_back(dump.a[i]);
  }
  report.probe_auc = metrics::auc(probe_scores, labels);
  report.adversary_branch_auc = metrics::auc(branch_scores, labels);
  return report;
}

Projection project_2d(const RepresentationDump& dump) {
  if (dump.h.cols() < 2) throw InvalidArgument("projection needs at least two activation columns");
  if (dump.h.rows() < 1) throw InvalidArgument("projection needs at least one row");
  Projection p;
  p.mean = dump.h.colwise().mean().transpose();
  const Matrix centered = dump.h.rowwise() - p.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(dump.h.rows());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const auto w = cov.cols();
  p.components.resize(w, 2);
  p.explained_variance.resize(2);
  for (Eigen::Index k = 0; k < 2; ++k) {
    Vector v = eig.eigenvectors().col(w - 1 - k);  // eigenvalues ascend
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    p.components.col(k) = v;
    p.explained_variance(k) = std::max(0.0, eig.eigenvalues()(w - 1 - k));
  }
  p.coords = centered * p.components;
  return p;
}

void write_dump_csv(const RepresentationDump& dump, const std::filesystem::path& path) {
  auto out = open_out(path);
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < dump.h.cols(); ++j) header.push_back("h_" + std::to_string(j));
  header.insert(header.end(), {"a", "adversary_score"});
  out << csv::join_row(header) << '\n';
  for (std::size_t i = 0; i < dump.rows(); ++i) {
    std::vector<std::string> fields;
    for (Eigen::Index j = 0; j < dump.h.cols(); ++j) fields.push_back(fmt17(dump.h(static_cast<Eigen::Index>(i), j)));
    fields.push_back(std::to_string(dump.a[i]));
    fields.push_back(fmt17(dump.adversary_scores[i]));
    out << csv::join_row(fields) << '\n';
  }
}

void write_projection_csv(const Projection& projection, const RepresentationDump& dump,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "pc1,pc2,a\n";
  for (Eigen::Index i = 0; i < projection.coords.rows(); ++i) {
    out << fmt17(projection.coords(i, 0)) << ',' << fmt17(projection.coords(i, 1)) << ','
        << dump.a[static_cast<std::size_t>(i)] << '\n';
  }
}

std::string probe_csv_header() { return "model,split,probe_auc,adversary_branch_auc,train_rows,eval_rows"; }

std::string probe_csv_row(const ProbeReport& report) {
  return csv::join_row({report.model_tag, "eval", metrics::format_metric(report.probe_auc),
                        metrics::format_metric(report.adversary_branch_auc), std::to_string(report.train_rows),
                        std::to_string(report.eval_rows)});
}

}  // namespace feedread::audit
