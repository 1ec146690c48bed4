#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "feedread/audit.hpp"
#include "feedread/csv.hpp"
#include "feedread/weights.hpp"

namespace feedread::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = csv::trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw InvalidArgument("manifest key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = csv::trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InvalidArgument("manifest key '" + key + "': '" + text + "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = csv::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(csv::trim(value));
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::string fmt6(double v) { return metrics::format_metric(v); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ParseError("failed writing '" + path.string() + "'");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["dataset"] = m.dataset;
  j["csv"] = m.csv.string();
  j["synthetic_n"] = m.synthetic_n;
  j["synthetic_bias"] = m.synthetic_bias;
  j["data_seed"] = m.data_seed;
  j["test_fraction"] = m.test_fraction;
  j["seeds"] = m.seeds;
  j["model"] = m.model_tag;
  j["framework"] = framework::config_to_json(m.framework);
  return j;
}

/// metadata.json is the only artifact carrying a timestamp.
class RunMetadata {
 public:
  RunMetadata(fs::path dir, std::string command, json manifest)
      : path_(std::move(dir) / "metadata.json"),
        doc_{{"command", std::move(command)}, {"started_at", utc_timestamp()}, {"manifest", std::move(manifest)}} {
    set_status("running");
  }
  void set_status(const std::string& status, const std::string& error = {}) {
    doc_["status"] = status;
    if (!error.empty()) doc_["error"] = error;
    doc_["updated_at"] = utc_timestamp();
    write_text(path_, doc_.dump(2) + "\n");
  }

 private:
  fs::path path_;
  json doc_;
};

template <class Fn>
auto with_metadata(const fs::path& dir, const std::string& command, json manifest, Fn&& body) {
  fs::create_directories(dir);
  RunMetadata meta(dir, command, std::move(manifest));
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      meta.set_status("ok");
    } else {
      auto result = body();
      meta.set_status("ok");
      return result;
    }
  } catch (const std::exception& e) {
    meta.set_status("failed", e.what());
    throw;
  }
}

struct Aggregate {
  std::optional<double> mean;
  std::optional<double> std;
};

Aggregate aggregate(const std::vector<std::optional<double>>& values) {
  Aggregate out;
  if (values.empty()) return out;
  for (const auto& v : values) {
    if (!v) return out;
  }
  double sum = 0.0;
  for (const auto& v : values) sum += *v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (const auto& v : values) sq += (*v - *out.mean) * (*v - *out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

const std::vector<std::pair<std::string, std::optional<double> metrics::FairnessReport::*>>& optional_metrics() {
  static const std::vector<std::pair<std::string, std::optional<double> metrics::FairnessReport::*>> fields{
      {"dp", &metrics::FairnessReport::dp},
      {"dpr", &metrics::FairnessReport::dpr},
      {"eo", &metrics::FairnessReport::eo},
      {"auc", &metrics::FairnessReport::auc}};
  return fields;
}

std::string aggregate_csv(const std::string& tag, const std::vector<metrics::FairnessReport>& reports) {
  std::string header = "model,seeds";
  std::string row = csv::escape(tag) + "," + std::to_string(reports.size());
  const auto add = [&](const std::string& name, const std::vector<std::optional<double>>& values) {
    const Aggregate a = aggregate(values);
    header += "," + name + "_mean," + name + "_std";
    row += "," + metrics::format_metric(a.mean) + "," + metrics::format_metric(a.std);
  };
  std::vector<std::optional<double>> acc, f1;
  for (const auto& r : reports) {
    acc.emplace_back(r.accuracy);
    f1.emplace_back(r.f1_macro);
  }
  add("acc", acc);
  add("f1", f1);
  for (const auto& [name, member] : optional_metrics()) {
    std::vector<std::optional<double>> values;
    for (const auto& r : reports) values.push_back(r.*member);
    add(name, values);
  }
  return header + "\n" + row + "\n";
}

bool looks_like_path(const std::string& dataset) {
  return dataset.find('/') != std::string::npos || dataset.find('.') != std::string::npos;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

const std::vector<std::string>& manifest_keys() {
  static const std::vector<std::string> keys{
      "dataset",        "csv",           "synthetic_n",         "synthetic_bias",        "data_seed",
      "test_fraction",  "hidden",        "lambda",              "target_head",           "epochs",
      "batch_size",     "learning_rate", "beta1",               "beta2",                 "epsilon_hat",
      "plateau_factor", "plateau_patience", "plateau_min_delta", "points_per_iteration", "adv_fraction",
      "max_iterations", "step_size",     "attack_max_iters",    "attack_plateau_tol",    "attack_plateau_window",
      "cv_folds",       "surrogate_max_samples", "smo_tolerance", "surrogate_c",         "surrogate_gamma",
      "epsilon",        "tau",           "nu",                  "seeds",                 "output",
      "model"};
  return keys;
}

RunManifest default_manifest() {
  RunManifest m;
  m.framework.network.hidden_layers = {32, 32, 32};
  m.framework.network.lambda = 100.0;
  return m;
}

void apply_setting(RunManifest& m, const std::string& key_in, const std::string& value_in, const fs::path& base_dir) {
  const std::string key = csv::trim(key_in);
  const std::string value = csv::trim(value_in);
  auto& fw = m.framework;
  auto& opt = fw.optimizer;
  auto& atk = fw.feeder.attack;
  const auto real = [&] { return parse_real(key, value); };
  const auto count = [&] { return static_cast<std::size_t>(parse_count(key, value)); };

  if (key == "dataset") m.dataset = value;
  else if (key == "csv") m.csv = resolve(base_dir, value);
  else if (key == "synthetic_n") m.synthetic_n = count();
  else if (key == "synthetic_bias") m.synthetic_bias = real();
  else if (key == "data_seed") m.data_seed = parse_count(key, value);
  else if (key == "test_fraction") m.test_fraction = real();
  else if (key == "hidden") {
    fw.network.hidden_layers.clear();
    for (const auto& w : split_list(value)) fw.network.hidden_layers.push_back(static_cast<std::size_t>(parse_count(key, w)));
  } else if (key == "lambda") fw.network.lambda = real();
  else if (key == "target_head") {
    if (value == "softmax") fw.network.target_head = nn::HeadKind::SoftmaxClassifier;
    else if (value == "linear") fw.network.target_head = nn::HeadKind::LinearRegressor;
    else throw InvalidArgument("manifest key 'target_head' must be 'softmax' or 'linear'");
    m.head_overridden = true;
  } else if (key == "epochs") fw.epochs = count();
  else if (key == "batch_size") fw.batch_size = count();
  else if (key == "learning_rate") opt.learning_rate = real();
  else if (key == "beta1") opt.beta1 = real();
  else if (key == "beta2") opt.beta2 = real();
  else if (key == "epsilon_hat") opt.epsilon_hat = real();
  else if (key == "plateau_factor") opt.plateau_factor = real();
  else if (key == "plateau_patience") opt.plateau_patience = count();
  else if (key == "plateau_min_delta") opt.plateau_min_delta = real();
  else if (key == "points_per_iteration") fw.points_per_iteration = count();
  else if (key == "adv_fraction") fw.target_adv_fraction = real();
  else if (key == "max_iterations") fw.max_iterations = count();
  else if (key == "step_size") atk.step_size = real();
  else if (key == "attack_max_iters") atk.max_iters = count();
  else if (key == "attack_plateau_tol") atk.plateau_tol = real();
  else if (key == "attack_plateau_window") atk.plateau_window = count();
  else if (key == "cv_folds") fw.feeder.cv_folds = count();
  else if (key == "surrogate_max_samples") fw.feeder.surrogate_max_samples = count();
  else if (key == "smo_tolerance") fw.feeder.grid.smo.tolerance = real();
  else if (key == "surrogate_c") m.surrogate_c = real();
  else if (key == "surrogate_gamma") m.surrogate_gamma = real();
  else if (key == "epsilon") fw.thresholds.epsilon = real();
  else if (key == "tau") fw.thresholds.tau = real();
  else if (key == "nu") fw.thresholds.nu = real();
  else if (key == "seeds") {
    m.seeds.clear();
    for (const auto& s : split_list(value)) m.seeds.push_back(parse_count(key, s));
  } else if (key == "output") m.output = resolve(base_dir, value);
  else if (key == "model") m.model_tag = value;
  else throw InvalidArgument("unknown manifest key '" + key + "'");

  if (m.surrogate_c && m.surrogate_gamma) fw.feeder.fixed_hyperparameters = std::make_pair(*m.surrogate_c, *m.surrogate_gamma);
}

void RunManifest::validate() const {
  if (seeds.empty()) throw InvalidArgument("manifest needs at least one seed");
  if (dataset.empty()) throw InvalidArgument("manifest needs a dataset");
  if (surrogate_c.has_value() != surrogate_gamma.has_value()) {
    throw InvalidArgument("surrogate_c and surrogate_gamma must be given together");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test_fraction must lie in (0, 1)");
  framework.validate();
}

RunManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  RunManifest m = default_manifest();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (csv::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_setting(m, line.substr(0, eq), line.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_manifest(buf.str(), path.parent_path());
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Data

DataSplit load_data(RunManifest& m) {
  DataSplit out;
  if (m.dataset == "synthetic") {
    const data::EncodedDataset ds = data::synthetic_biased(m.synthetic_n, m.synthetic_bias, m.data_seed);
    const data::Split sp = data::split(ds, m.test_fraction, m.data_seed);
    out.train = data::subset(ds, sp.train);
    out.test = data::subset(ds, sp.test);
  } else {
    data::DatasetSpec spec = looks_like_path(m.dataset) ? data::load_dataset_spec(m.dataset) : data::preset(m.dataset);
    if (!m.csv.empty()) spec.csv_path = m.csv;
    data::PreparedData prepared = data::prepare(spec, m.test_fraction, m.data_seed);
    out.train = std::move(prepared.train);
    out.test = std::move(prepared.test);
    out.dropped_missing = prepared.dropped_missing;
    out.dropped_filter = prepared.dropped_filter;
  }
  if (!m.head_overridden) {
    m.framework.network.target_head = out.train.encoder.target_kind == data::TargetKind::Regression
                                          ? nn::HeadKind::LinearRegressor
                                          : nn::HeadKind::SoftmaxClassifier;
  }
  return out;
}

void write_data_dir(const DataSplit& split, const fs::path& dir) {
  fs::create_directories(dir);
  data::write_encoded_csv(split.train, dir / "train.csv");
  data::write_encoded_csv(split.test, dir / "test.csv");
  write_text(dir / "encoder.json", split.train.encoder.to_json().dump(2) + "\n");
}

DataSplit read_data_dir(const fs::path& dir) {
  std::ifstream in(dir / "encoder.json");
  if (!in) throw ParseError("cannot open '" + (dir / "encoder.json").string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError((dir / "encoder.json").string() + ": " + e.what());
  }
  const data::EncoderState encoder = data::EncoderState::from_json(j);
  DataSplit out;
  out.train = data::read_encoded_csv(dir / "train.csv", encoder);
  out.test = data::read_encoded_csv(dir / "test.csv", encoder);
  return out;
}

// ---------------------------------------------------------------------------
// Commands

std::vector<SeedOutcome> cmd_run(RunManifest m) {
  m.validate();
  return with_metadata(m.output, "run", manifest_to_json(m), [&] {
    const DataSplit split = load_data(m);
    write_data_dir(split, m.output / "data");
    std::vector<SeedOutcome> outcomes;
    std::string report = metrics::report_csv_header() + "\n";
    std::vector<metrics::FairnessReport> finals;
    for (const auto seed : m.seeds) {
      framework::FrameworkConfig cfg = m.framework;
      cfg.seed = seed;
      SeedOutcome outcome{seed, framework::run(split.train, split.test, cfg)};
      const fs::path dir = m.output / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      write_text(dir / "history.json", framework::history_to_json(outcome.history).dump(2) + "\n");
      std::string rows = framework::history_csv_header() + "\n";
      for (const auto& r : outcome.history.records) rows += framework::history_csv_row(r) + "\n";
      write_text(dir / "history.csv", rows);
      weights::save(dir / "weights.txt", outcome.history.final_state);
      const auto& final_report = outcome.history.records.back().report;
      report += metrics::report_csv_row(m.model_tag + "@seed" + std::to_string(seed), "test", final_report) + "\n";
      finals.push_back(final_report);
      outcomes.push_back(std::move(outcome));
    }
    write_text(m.output / "report.csv", report);
    write_text(m.output / "aggregate.csv", aggregate_csv(m.model_tag, finals));
    return outcomes;
  });
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real("fractions", item));
  if (out.empty()) throw InvalidArgument("no fractions given");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0 && out[i] < 1.0)) throw InvalidArgument("fractions must lie in [0, 1)");
    if (i > 0 && out[i] == out[i - 1]) throw InvalidArgument("duplicate fraction " + fmt6(out[i]));
    if (i > 0 && out[i] < out[i - 1]) throw InvalidArgument("fractions must be sorted ascending");
  }
  return out;
}

void cmd_sweep(RunManifest m, std::vector<double> fractions) {
  m.validate();
  if (fractions.empty()) throw InvalidArgument("no fractions given");
  for (std::size_t i = 1; i < fractions.size(); ++i) {
    if (fractions[i] == fractions[i - 1]) throw InvalidArgument("duplicate fraction " + fmt6(fractions[i]));
    if (fractions[i] < fractions[i - 1]) throw InvalidArgument("fractions must be sorted ascending");
  }
  json manifest = manifest_to_json(m);
  manifest["fractions"] = fractions;
  with_metadata(m.output, "sweep", std::move(manifest), [&] {
    const DataSplit split = load_data(m);
    const std::size_t n0 = split.train.rows();
    std::vector<std::vector<metrics::FairnessReport>> by_fraction(fractions.size());
    for (const auto seed : m.seeds) {
      framework::FrameworkConfig cfg = m.framework;
      cfg.seed = seed;
      cfg.target_adv_fraction = fractions.back();
      const framework::RunHistory history = framework::run(split.train, split.test, cfg);
      const fs::path dir = m.output / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      std::string rows = framework::history_csv_header() + "\n";
      for (const auto& r : history.records) rows += framework::history_csv_row(r) + "\n";
      write_text(dir / "history.csv", rows);
      for (std::size_t f = 0; f < fractions.size(); ++f) {
        framework::FrameworkConfig at = cfg;
        at.target_adv_fraction = fractions[f];
        by_fraction[f].push_back(history.records.at(framework::planned_iterations(at, n0)).report);
      }
    }
    std::string out = "fraction,acc,f1,dp,dpr,eo\n";
    for (std::size_t f = 0; f < fractions.size(); ++f) {
      for (const auto& r : by_fraction[f]) {
        out += fmt6(fractions[f]) + "," + fmt6(r.accuracy) + "," + fmt6(r.f1_macro) + "," +
               metrics::format_metric(r.dp) + "," + metrics::format_metric(r.dpr) + "," +
               metrics::format_metric(r.eo) + "\n";
      }
    }
    write_text(m.output / "sweep.csv", out);
  });
}

void cmd_audit(const std::vector<AuditInput>& models, const fs::path& data_dir, const fs::path& out_dir, bool project,
               std::uint64_t seed) {
  if (models.empty()) throw InvalidArgument("audit needs at least one weight file");
  json manifest{{"data", data_dir.string()}, {"project", project}, {"seed", seed}};
  for (const auto& mdl : models) manifest["models"].push_back({{"tag", mdl.tag}, {"weights", mdl.weights.string()}});
  with_metadata(out_dir, "audit", std::move(manifest), [&] {
    const DataSplit split = read_data_dir(data_dir);
    std::string table = audit::probe_csv_header() + "\n";
    for (const auto& mdl : models) {
      const nn::NetworkState state = weights::load(mdl.weights);
      if (state.spec.input_dim != split.test.dim()) {
        throw InvalidArgument(mdl.weights.string() + ": network expects " + std::to_string(state.spec.input_dim) +
                              " features, data has " + std::to_string(split.test.dim()));
      }
      const audit::RepresentationDump dump = audit::extract_representations(state, split.test, mdl.tag, "test");
      table += audit::probe_csv_row(audit::train_probe(dump, seed)) + "\n";
      if (project) {
        audit::write_dump_csv(dump, out_dir / (mdl.tag + "_activations.csv"));
        audit::write_projection_csv(audit::project_2d(dump), dump, out_dir / (mdl.tag + "_projection.csv"));
      }
    }
    write_text(out_dir / "probe.csv", table);
  });
}

void cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_file) {
  if (run_dirs.empty()) throw InvalidArgument("report needs at least one run directory");
  std::string out;
  std::vector<std::string> header;
  for (const auto& dir : run_dirs) {
    const csv::Table t = csv::read(dir / "aggregate.csv");
    if (header.empty()) {
      header = t.header;
      std::vector<std::string> full{"run"};
      full.insert(full.end(), header.begin(), header.end());
      out += csv::join_row(full) + "\n";
    } else if (t.header != header) {
      throw ParseError((dir / "aggregate.csv").string() + ": columns differ from the first run");
    }
    for (const auto& row : t.rows) {
      std::vector<std::string> full{dir.filename().string()};
      full.insert(full.end(), row.begin(), row.end());
      out += csv::join_row(full) + "\n";
    }
  }
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  write_text(out_file, out);
}

// ---------------------------------------------------------------------------
// Entry point

namespace {

RunManifest manifest_from_flags(const std::string& path, const std::vector<std::string>& sets, const std::string& out) {
  RunManifest m = path.empty() ? default_manifest() : load_manifest(path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    apply_setting(m, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!out.empty()) m.output = out;
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware training with a gradient-reversal reader and an evasion-attack feeder"};
  app.require_subcommand(1);

  std::string dataset, csv_path, out, manifest_path, data_dir, fractions_text = "0,0.25,0.5,0.75";
  std::size_t n = 5000;
  double bias = 1.0, test_fraction = 0.2;
  std::uint64_t seed = 1;
  std::vector<std::string> sets, weight_args;
  std::vector<std::string> inputs;
  bool project = false;

  auto* prepare = app.add_subcommand("prepare", "Load, filter, encode and split a dataset");
  prepare->add_option("--dataset", dataset, "Preset name (compas, german, adult), 'synthetic', or a spec file")->required();
  prepare->add_option("--csv", csv_path, "CSV file for a preset or spec");
  prepare->add_option("--n", n, "Synthetic rows");
  prepare->add_option("--bias", bias, "Synthetic bias strength in [0, 1]");
  prepare->add_option("--seed", seed, "Split (and synthetic generator) seed");
  prepare->add_option("--test-fraction", test_fraction, "Held-out fraction");
  prepare->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run the framework for every manifest seed");
  run->add_option("--manifest", manifest_path, "Manifest file (key = value)");
  run->add_option("--set", sets, "Override a manifest key (key=value)");
  run->add_option("--out", out, "Output directory (overrides the manifest)");

  auto* sweep = app.add_subcommand("sweep", "Metrics against the adversarial fraction");
  sweep->add_option("--manifest", manifest_path, "Manifest file (key = value)");
  sweep->add_option("--set", sets, "Override a manifest key (key=value)");
  sweep->add_option("--fractions", fractions_text, "Comma-separated ascending fractions");
  sweep->add_option("--out", out, "Output directory (overrides the manifest)");

  auto* audit_cmd = app.add_subcommand("audit", "Leakage probe on saved weights");
  audit_cmd->add_option("--data", data_dir, "Directory with train.csv, test.csv, encoder.json")->required();
  audit_cmd->add_option("--weights", weight_args, "tag=path to a weight dump (repeatable)")->required();
  audit_cmd->add_option("--out", out, "Output directory")->required();
  audit_cmd->add_option("--seed", seed, "Probe split and shuffling seed");
  audit_cmd->add_flag("--project", project, "Also write activations and 2D projections");

  auto* report = app.add_subcommand("report", "Combine aggregate.csv of several runs");
  report->add_option("--input", inputs, "Run output directory (repeatable)")->required();
  report->add_option("--out", out, "Output CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*prepare) {
      RunManifest m = default_manifest();
      m.dataset = dataset;
      m.csv = csv_path;
      m.synthetic_n = n;
      m.synthetic_bias = bias;
      m.data_seed = seed;
      m.test_fraction = test_fraction;
      m.validate();
      json manifest = manifest_to_json(m);
      manifest.erase("framework");
      with_metadata(out, "prepare", std::move(manifest), [&] {
        const DataSplit split = load_data(m);
        write_data_dir(split, out);
        std::cout << "train rows " << split.train.rows() << ", test rows " << split.test.rows() << ", features "
                  << split.train.dim() << ", dropped (missing) " << split.dropped_missing << ", dropped (filter) "
                  << split.dropped_filter << "\n";
      });
    } else if (*run) {
      const auto outcomes = cmd_run(manifest_from_flags(manifest_path, sets, out));
      std::cout << "completed " << outcomes.size() << " seed(s)\n";
    } else if (*sweep) {
      cmd_sweep(manifest_from_flags(manifest_path, sets, out), parse_fractions(fractions_text));
    } else if (*audit_cmd) {
      std::vector<AuditInput> models;
      for (const auto& w : weight_args) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) models.push_back({fs::path(w).stem().string(), w});
        else models.push_back({w.substr(0, eq), w.substr(eq + 1)});
      }
      cmd_audit(models, data_dir, out, project, seed);
    } else if (*report) {
      std::vector<fs::path> dirs(inputs.begin(), inputs.end());
      cmd_report(dirs, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace feedread::cli
