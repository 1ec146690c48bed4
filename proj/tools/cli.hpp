#pragma once

// Command implementations behind the `feedread` executable. Kept in a library
// so the test suites can drive the same code paths.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "feedread/data.hpp"
#include "feedread/framework.hpp"

namespace feedread::cli {

/// Flat `key = value` run description. Unknown keys are rejected.
struct RunManifest {
  std::string dataset = "synthetic";  // preset name, "synthetic", or a dataset spec file
  std::filesystem::path csv;          // overrides the dataset description's csv path
  std::size_t synthetic_n = 5000;
  double synthetic_bias = 1.0;
  std::uint64_t data_seed = 1;
  double test_fraction = 0.2;
  framework::FrameworkConfig framework;
  bool head_overridden = false;
  std::optional<double> surrogate_c;      // both set: skip the surrogate grid search
  std::optional<double> surrogate_gamma;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output = "out";
  std::string model_tag = "model";

  void validate() const;
};

/// Keys accepted by `parse_manifest` / `--set`.
const std::vector<std::string>& manifest_keys();

RunManifest default_manifest();
void apply_setting(RunManifest& m, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});
RunManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
RunManifest load_manifest(const std::filesystem::path& path);

struct DataSplit {
  data::EncodedDataset train;
  data::EncodedDataset test;
  std::size_t dropped_missing = 0;
  std::size_t dropped_filter = 0;
};

/// Loads (or generates) and splits the manifest's dataset. The network head
/// follows the dataset's target kind unless the manifest sets it.
DataSplit load_data(RunManifest& m);

/// Writes train.csv, test.csv and encoder.json.
void write_data_dir(const DataSplit& data, const std::filesystem::path& dir);
DataSplit read_data_dir(const std::filesystem::path& dir);

struct SeedOutcome {
  std::uint64_t seed = 0;
  framework::RunHistory history;
};

/// One framework run per seed. Writes per-seed history JSON/CSV and weights,
/// report.csv (one row per seed) and aggregate.csv (mean and sample std).
std::vector<SeedOutcome> cmd_run(RunManifest m);

/// One run per seed up to the largest fraction; the record at each requested
/// fraction is the one a run with that target would end on. Writes sweep.csv
/// with columns fraction, acc, f1, dp, dpr, eo (ordered by fraction, then seed).
void cmd_sweep(RunManifest m, std::vector<double> fractions);

struct AuditInput {
  std::string tag;
  std::filesystem::path weights;
};

/// Probe report per model on the test split of `data_dir`; optional dumps and
/// 2D projections per model.
void cmd_audit(const std::vector<AuditInput>& models, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir, bool project, std::uint64_t seed);

/// Stacks aggregate.csv files of several run directories into one table.
void cmd_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_file);

/// Comma-separated fractions; must be strictly ascending and inside [0, 1).
std::vector<double> parse_fractions(const std::string& text);

int main(int argc, char** argv);

}  // namespace feedread::cli
