#include "feedread/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace feedread::metrics {

namespace {

bool is_binary(int v) { return v == 0 || v == 1; }

double positive_rate(const GroupCounts& c, int group) {
  return static_cast<double>(c.predicted_positive[group]) / static_cast<double>(c.n[group]);
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("*");
}

std::optional<double> optional_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  return std::nullopt;
}

}  // namespace

void PredictionSet::validate() const {
  if (y_hat.empty()) throw InvalidArgument("prediction set is empty");
  if (y.size() != y_hat.size() || a.size() != y_hat.size()) {
    throw InvalidArgument("prediction, label and group vectors differ in length");
  }
  if (scores && scores->size() != y_hat.size()) throw InvalidArgument("score vector length mismatch");
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    if (!is_binary(y_hat[i]) || !is_binary(y[i]) || !is_binary(a[i])) {
      throw InvalidArgument("prediction set values must be 0 or 1");
    }
  }
}

GroupCounts GroupCounts::tally(const PredictionSet& p) {
  p.validate();
  GroupCounts c;
  for (std::size_t i = 0; i < p.y_hat.size(); ++i) {
    const int g = p.a[i];
    c.n[g] += 1;
    c.predicted_positive[g] += static_cast<std::size_t>(p.y_hat[i]);
    c.actual_positive[g] += static_cast<std::size_t>(p.y[i]);
    c.true_positive[g] += static_cast<std::size_t>(p.y_hat[i] & p.y[i]);
  }
  return c;
}

double demographic_parity(const PredictionSet& p) {
  const GroupCounts c = GroupCounts::tally(p);
  if (c.n[0] == 0 || c.n[1] == 0) throw UndefinedMetric("demographic parity needs both protected groups");
  return std::abs(positive_rate(c, 0) - positive_rate(c, 1));
}

std::optional<double> dp_ratio(const PredictionSet& p) {
  const GroupCounts c = GroupCounts::tally(p);
  if (c.n[0] == 0 || c.n[1] == 0) throw UndefinedMetric("DP ratio needs both protected groups");
  if (c.predicted_positive[0] == 0) return std::nullopt;
  return positive_rate(c, 1) / positive_rate(c, 0);
}

double equal_opportunity(const PredictionSet& p) {
  const GroupCounts c = GroupCounts::tally(p);
  if (c.actual_positive[0] == 0 || c.actual_positive[1] == 0) {
    throw UndefinedMetric("equal opportunity needs a y=1 example in both protected groups");
  }
  const double tpr0 = static_cast<double>(c.true_positive[0]) / static_cast<double>(c.actual_positive[0]);
  const double tpr1 = static_cast<double>(c.true_positive[1]) / static_cast<double>(c.actual_positive[1]);
  return std::abs(tpr0 - tpr1);
}

Utility utility(const PredictionSet& p) {
  p.validate();
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < p.y_hat.size(); ++i) {
    const int pred = p.y_hat[i], truth = p.y[i];
    correct += pred == truth;
    tp += pred == 1 && truth == 1;
    fp += pred == 1 && truth == 0;
    fn += pred == 0 && truth == 1;
    tn += pred == 0 && truth == 0;
  }
  Utility u;
  u.accuracy = static_cast<double>(correct) / static_cast<double>(p.y_hat.size());
  // Class 0 swaps the roles of false positives and false negatives.
  u.f1_macro = (f1(tp, fp, fn) + f1(tn, fn, fp)) / 2.0;
  return u;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("score and label vectors differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (!is_binary(l)) throw InvalidArgument("AUC labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(l);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("AUC needs both positive and negative labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

  // Sum of midranks of the positives.
  double positive_rank_sum = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    const double midrank = (static_cast<double>(start + 1) + static_cast<double>(stop)) / 2.0;
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[order[k]] == 1) positive_rank_sum += midrank;
    }
    start = stop;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

FairnessReport evaluate(const PredictionSet& p, const FairnessThresholds& thresholds) {
  FairnessReport r;
  r.counts = GroupCounts::tally(p);
  r.thresholds = thresholds;
  const Utility u = utility(p);
  r.accuracy = u.accuracy;
  r.f1_macro = u.f1_macro;
  try {
    r.dp = demographic_parity(p);
    r.dpr = dp_ratio(p);
  } catch (const UndefinedMetric&) {
  }
  try {
    r.eo = equal_opportunity(p);
  } catch (const UndefinedMetric&) {
  }
  if (p.scores) {
    try {
      r.auc = auc(*p.scores, p.y);
    } catch (const UndefinedMetric&) {
    }
  }
  return r;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "*";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string report_csv_header() { return "model,split,acc,f1,dp,dpr,eo,auc"; }

std::string report_csv_row(const std::string& model, const std::string& split, const FairnessReport& r) {
  return model + "," + split + "," + format_metric(r.accuracy) + "," + format_metric(r.f1_macro) + "," +
         format_metric(r.dp) + "," + format_metric(r.dpr) + "," + format_metric(r.eo) + "," + format_metric(r.auc);
}

nlohmann::json report_to_json(const FairnessReport& r) {
  nlohmann::json counts;
  for (int g = 0; g < 2; ++g) {
    counts.push_back({{"n", r.counts.n[g]},
                      {"predicted_positive", r.counts.predicted_positive[g]},
                      {"actual_positive", r.counts.actual_positive[g]},
                      {"true_positive", r.counts.true_positive[g]}});
  }
  return {{"acc", r.accuracy},
          {"f1", r.f1_macro},
          {"dp", optional_json(r.dp)},
          {"dpr", optional_json(r.dpr)},
          {"eo", optional_json(r.eo)},
          {"auc", optional_json(r.auc)},
          {"group_counts", counts},
          {"thresholds", {{"epsilon", r.thresholds.epsilon}, {"tau", r.thresholds.tau}, {"nu", r.thresholds.nu}}}};
}

FairnessReport report_from_json(const nlohmann::json& j) {
  FairnessReport r;
  r.accuracy = j.at("acc").get<double>();
  r.f1_macro = j.at("f1").get<double>();
  r.dp = optional_from_json(j.at("dp"));
  r.dpr = optional_from_json(j.at("dpr"));
  r.eo = optional_from_json(j.at("eo"));
  r.auc = optional_from_json(j.at("auc"));
  if (j.contains("group_counts")) {
    const auto& counts = j.at("group_counts");
    for (int g = 0; g < 2; ++g) {
      r.counts.n[g] = counts.at(g).at("n").get<std::size_t>();
      r.counts.predicted_positive[g] = counts.at(g).at("predicted_positive").get<std::size_t>();
      r.counts.actual_positive[g] = counts.at(g).at("actual_positive").get<std::size_t>();
      r.counts.true_positive[g] = counts.at(g).at("true_positive").get<std::size_t>();
    }
  }
  if (j.contains("thresholds")) {
    r.thresholds.epsilon = j["thresholds"].at("epsilon").get<double>();
    r.thresholds.tau = j["thresholds"].at("tau").get<double>();
    r.thresholds.nu = j["thresholds"].at("nu").get<double>();
  }
  return r;
}

}  // namespace feedread::metrics
