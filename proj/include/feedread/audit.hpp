#pragma once

// Representation leakage: how well an independently trained probe recovers the
// protected attribute from last-hidden-layer activations, compared with the
// network's own adversary head. Also a 2D PCA projection for plotting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedread/data.hpp"
#include "feedread/nn.hpp"

namespace feedread::audit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RepresentationDump {
  Matrix h;                              // n x width of the last hidden layer
  std::vector<int> a;
  std::vector<double> adversary_scores;  // adversary head p(a = 1)
  std::string model_tag;
  std::string split_tag;

  std::size_t rows() const { return static_cast<std::size_t>(h.rows()); }
};

RepresentationDump extract_representations(const nn::NetworkState& state, const data::EncodedDataset& ds,
                                           std::string model_tag = "model", std::string split_tag = "test");

struct ProbeConfig {
  double eval_fraction = 0.3;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  nn::OptimizerConfig optimizer;  // learning rate and Adam moments; plateau settings unused
};

struct ProbeReport {
  std::string model_tag;
  std::optional<double> probe_auc;
  std::optional<double> adversary_branch_auc;
  std::size_t train_rows = 0;
  std::size_t eval_rows = 0;
};

/// Logistic-regression probe for a on a stratified split of the dump; inputs
/// are standardised with statistics from the probe's training rows. Both AUCs
/// are measured on the same evaluation rows. Single-class a gives empty AUCs.
ProbeReport train_probe(const RepresentationDump& dump, std::uint64_t seed, const ProbeConfig& cfg = {});

struct Projection {
  Matrix coords;      // n x 2
  Matrix components;  // width x 2, orthonormal columns
  Vector mean;
  Vector explained_variance;  // top two eigenvalues of the covariance
};

/// Top two principal components of the centred activations. Each component's
/// largest-magnitude loading is made positive. Width below 2 is an error.
Projection project_2d(const RepresentationDump& dump);

/// h_0..h_{w-1}, a, adversary_score
void write_dump_csv(const RepresentationDump& dump, const std::filesystem::path& path);
/// pc1, pc2, a
void write_projection_csv(const Projection& projection, const RepresentationDump& dump,
                          const std::filesystem::path& path);
std::string probe_csv_header();
std::string probe_csv_row(const ProbeReport& report);

}  // namespace feedread::audit
