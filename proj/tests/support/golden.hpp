#pragma once

// Network weights, inputs and reference activations from
// tests/data/golden_trace.csv (generated by make_golden_trace.py).

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "feedread/csv.hpp"
#include "feedread/nn.hpp"

namespace oracle {

/// Fills `tensors` with every tensor in the trace and returns the network
/// (4 inputs, hidden 5 and 3) built from its weights.
inline feedread::nn::NetworkState load_golden(std::map<std::string, Eigen::MatrixXd>& tensors) {
  feedread::nn::NetworkSpec spec;
  spec.input_dim = 4;
  spec.hidden_layers = {5, 3};
  spec.lambda = 1.0;
  const feedread::csv::Table t = feedread::csv::read(FEEDREAD_TEST_DATA_DIR "/golden_trace.csv");
  std::map<std::string, std::vector<std::array<double, 3>>> raw;
  for (const auto& row : t.rows) raw[row[0]].push_back({std::stod(row[1]), std::stod(row[2]), std::stod(row[3])});
  for (const auto& [name, entries] : raw) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& e : entries) {
      rows = std::max(rows, static_cast<Eigen::Index>(e[0]) + 1);
      cols = std::max(cols, static_cast<Eigen::Index>(e[1]) + 1);
    }
    Eigen::MatrixXd m(rows, cols);
    for (const auto& e : entries) m(static_cast<Eigen::Index>(e[0]), static_cast<Eigen::Index>(e[1])) = e[2];
    tensors[name] = m;
  }
  feedread::nn::NetworkState s = feedread::nn::init_network(spec, 0);
  for (std::size_t l = 0; l < 2; ++l) {
    s.params.shared[l].weight = tensors["shared_" + std::to_string(l) + ".weight"];
    s.params.shared[l].bias = tensors["shared_" + std::to_string(l) + ".bias"].row(0).transpose();
  }
  s.params.target_head.weight = tensors["target.weight"];
  s.params.target_head.bias = tensors["target.bias"].row(0).transpose();
  s.params.adversary_head.weight = tensors["adversary.weight"];
  s.params.adversary_head.bias = tensors["adversary.bias"].row(0).transpose();
  return s;
}

}  // namespace oracle
