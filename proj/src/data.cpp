#include "feedread/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace feedread::data {

namespace {

std::optional<double> parse_number(std::string_view s) {
  const std::string t = csv::trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(csv::trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  out.push_back(csv::trim(current));
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool evaluate(const Predicate& p, std::string_view cell, std::string_view where) {
  const std::string value = csv::trim(cell);
  using Op = Predicate::Op;
  if (p.op == Op::In) return std::find(p.values.begin(), p.values.end(), value) != p.values.end();
  const std::string& rhs = p.values.front();
  const auto lnum = parse_number(value);
  const auto rnum = parse_number(rhs);
  if (lnum && rnum) {
    switch (p.op) {
      case Op::Eq: return *lnum == *rnum;
      case Op::Ne: return *lnum != *rnum;
      case Op::Lt: return *lnum < *rnum;
      case Op::Le: return *lnum <= *rnum;
      case Op::Gt: return *lnum > *rnum;
      case Op::Ge: return *lnum >= *rnum;
      case Op::In: break;
    }
  }
  if (p.op == Op::Eq) return value == rhs;
  if (p.op == Op::Ne) return value != rhs;
  throw ParseError(std::string(where) + ": column '" + p.column + "' value '" + value +
                   "' is not numeric, cannot evaluate '" + p.to_string() + "'");
}

std::string where(const csv::Table& t, std::size_t row, std::string_view source) {
  return std::string(source) + ":" + std::to_string(t.line_numbers[row]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Predicate / spec parsing

Predicate Predicate::parse(std::string_view text) {
  struct Token {
    std::string_view symbol;
    Op op;
  };
  static constexpr Token kTokens[] = {{" in ", Op::In}, {"==", Op::Eq}, {"!=", Op::Ne}, {"<=", Op::Le},
                                      {">=", Op::Ge},   {"<", Op::Lt},  {">", Op::Gt}};
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (const Token& tok : kTokens) {
      if (text.substr(i, tok.symbol.size()) != tok.symbol) continue;
      Predicate p;
      p.column = csv::trim(text.substr(0, i));
      p.op = tok.op;
      const std::string rhs = csv::trim(text.substr(i + tok.symbol.size()));
      p.values = tok.op == Op::In ? split_list(rhs, '|') : std::vector<std::string>{rhs};
      if (p.column.empty()) throw ParseError("predicate '" + std::string(text) + "' has no column");
      return p;
    }
  }
  throw ParseError("cannot parse predicate '" + std::string(text) + "'");
}

std::string Predicate::to_string() const {
  static constexpr const char* kSymbols[] = {"==", "!=", "<", "<=", ">", ">=", "in"};
  std::string rhs;
  for (std::size_t i = 0; i < values.size(); ++i) rhs += (i ? "|" : "") + values[i];
  return column + " " + kSymbols[static_cast<int>(op)] + " " + rhs;
}

void DatasetSpec::validate() const {
  if (target_column.empty()) throw InvalidArgument("dataset spec '" + name + "' has no target");
  if (protected_column.empty()) throw InvalidArgument("dataset spec '" + name + "' has no protected column");
  if (target_kind == TargetKind::Binary && !positive_rule) {
    throw InvalidArgument("binary target of '" + name + "' needs a positive rule");
  }
  if (features.empty()) throw InvalidArgument("dataset spec '" + name + "' has no feature columns");
  for (const ColumnSpec& c : features) {
    if (c.name == target_column) throw InvalidArgument("target column '" + c.name + "' is listed as a feature");
    if (label_rule && c.name == label_rule->column) {
      throw InvalidArgument("label column '" + c.name + "' is listed as a feature");
    }
    if (!allow_protected_feature && c.name == protected_column) {
      throw InvalidArgument("protected column '" + c.name + "' is listed as a feature");
    }
  }
}

DatasetSpec parse_dataset_spec(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetSpec spec;
  spec.missing_tokens = {""};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<ColumnSpec> numeric, categorical;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = csv::trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("dataset spec line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = csv::trim(stripped.substr(0, eq));
    const std::string value = csv::trim(stripped.substr(eq + 1));
    if (key == "name") {
      spec.name = value;
    } else if (key == "csv") {
      const std::filesystem::path p(value);
      spec.csv_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else if (key == "target") {
      spec.target_column = value;
    } else if (key == "target_kind") {
      if (value == "binary") spec.target_kind = TargetKind::Binary;
      else if (value == "regression") spec.target_kind = TargetKind::Regression;
      else throw ParseError("dataset spec line " + std::to_string(line_no) + ": unknown target_kind '" + value + "'");
    } else if (key == "positive") {
      spec.positive_rule = Predicate::parse(value);
      if (spec.target_column.empty()) spec.target_column = spec.positive_rule->column;
    } else if (key == "threshold") {
      const auto v = parse_number(value);
      if (!v) throw ParseError("dataset spec line " + std::to_string(line_no) + ": threshold is not a number");
      spec.regression_threshold = *v;
    } else if (key == "label") {
      spec.label_rule = Predicate::parse(value);
    } else if (key == "protected") {
      spec.protected_column = value;
    } else if (key == "disadvantaged") {
      spec.disadvantaged_rule = Predicate::parse(value);
      if (spec.protected_column.empty()) spec.protected_column = spec.disadvantaged_rule.column;
    } else if (key == "numeric") {
      for (auto& n : split_list(value, ',')) numeric.push_back({n, FeatureKind::Numeric});
    } else if (key == "categorical") {
      for (auto& n : split_list(value, ',')) categorical.push_back({n, FeatureKind::Categorical});
    } else if (key == "filter") {
      spec.row_filter.push_back(Predicate::parse(value));
    } else if (key == "missing") {
      for (auto& tok : split_list(value, ',')) spec.missing_tokens.push_back(tok);
    } else if (key == "allow_protected_feature") {
      spec.allow_protected_feature = value == "true" || value == "1";
    } else {
      throw ParseError("dataset spec line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  spec.features = numeric;
  spec.features.insert(spec.features.end(), categorical.begin(), categorical.end());
  if (spec.disadvantaged_rule.column.empty()) throw ParseError("dataset spec has no 'disadvantaged' rule");
  spec.validate();
  return spec;
}

DatasetSpec load_dataset_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_spec(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Loading

RawTable load_table(const DatasetSpec& spec) {
  if (spec.csv_path.empty()) throw InvalidArgument("dataset spec '" + spec.name + "' has no csv path");
  if (!std::filesystem::exists(spec.csv_path)) {
    throw ParseError("dataset file '" + spec.csv_path.string() + "' does not exist");
  }
  return load_table(spec, csv::read(spec.csv_path));
}

RawTable load_table(const DatasetSpec& spec, const csv::Table& table) {
  spec.validate();
  const std::string source = spec.csv_path.empty() ? spec.name : spec.csv_path.string();
  RawTable raw;
  raw.table = table;

  std::set<std::size_t> required;
  for (const ColumnSpec& c : spec.features) required.insert(table.column(c.name, source));
  const std::size_t target_col = table.column(spec.target_column, source);
  const std::size_t protected_col = table.column(spec.protected_column, source);
  const std::size_t disadvantaged_col = table.column(spec.disadvantaged_rule.column, source);
  required.insert({target_col, protected_col, disadvantaged_col});
  std::optional<std::size_t> label_col;
  if (spec.label_rule) {
    label_col = table.column(spec.label_rule->column, source);
    required.insert(*label_col);
  }
  std::vector<std::size_t> filter_cols;
  for (const Predicate& p : spec.row_filter) {
    filter_cols.push_back(table.column(p.column, source));
    required.insert(filter_cols.back());
  }
  const std::size_t positive_col = spec.positive_rule ? table.column(spec.positive_rule->column, source) : target_col;
  required.insert(positive_col);

  auto is_missing = [&](const std::string& cell) {
    const std::string t = csv::trim(cell);
    return std::find(spec.missing_tokens.begin(), spec.missing_tokens.end(), t) != spec.missing_tokens.end();
  };

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (std::any_of(required.begin(), required.end(), [&](std::size_t c) { return is_missing(row[c]); })) {
      ++raw.dropped_missing;
      continue;
    }
    const std::string loc = where(table, r, source);
    bool keep = true;
    for (std::size_t f = 0; f < spec.row_filter.size() && keep; ++f) {
      keep = evaluate(spec.row_filter[f], row[filter_cols[f]], loc);
    }
    if (!keep) {
      ++raw.dropped_filter;
      continue;
    }
    double target = 0.0;
    if (spec.target_kind == TargetKind::Binary) {
      target = evaluate(*spec.positive_rule, row[positive_col], loc) ? 1.0 : 0.0;
    } else {
      const auto v = parse_number(row[target_col]);
      if (!v) throw ParseError(loc + ": target '" + spec.target_column + "' value '" + row[target_col] + "' is not numeric");
      target = *v;
    }
    int label = 0;
    if (spec.label_rule) label = evaluate(*spec.label_rule, row[*label_col], loc) ? 1 : 0;
    else label = spec.target_kind == TargetKind::Binary ? static_cast<int>(target) : (target > spec.regression_threshold);
    raw.kept.push_back(r);
    raw.target.push_back(target);
    raw.label.push_back(label);
    raw.a.push_back(evaluate(spec.disadvantaged_rule, row[disadvantaged_col], loc) ? 1 : 0);
  }
  if (raw.kept.empty()) throw ParseError(source + ": no rows left after removing missing values and filtering");
  return raw;
}

// ---------------------------------------------------------------------------
// Encoding

std::size_t EncoderState::width() const {
  std::size_t w = 0;
  for (const auto& c : columns) w += c.width();
  return w;
}

std::vector<std::string> EncoderState::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (c.kind == FeatureKind::Numeric) names.push_back(c.name);
    else for (const auto& cat : c.categories) names.push_back(c.name + "=" + cat);
  }
  return names;
}

nlohmann::json EncoderState::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json j = {{"name", c.name},
                        {"kind", c.kind == FeatureKind::Numeric ? "numeric" : "categorical"},
                        {"offset", c.offset}};
    if (c.kind == FeatureKind::Numeric) {
      j["mean"] = c.mean;
      j["scale"] = c.scale;
      j["constant"] = c.constant;
    } else {
      j["categories"] = c.categories;
    }
    cols.push_back(j);
  }
  return {{"columns", cols},
          {"target_kind", target_kind == TargetKind::Binary ? "binary" : "regression"},
          {"regression_threshold", regression_threshold}};
}

EncoderState EncoderState::from_json(const nlohmann::json& j) {
  EncoderState e;
  for (const auto& jc : j.at("columns")) {
    EncodedColumn c;
    c.name = jc.at("name").get<std::string>();
    c.kind = jc.at("kind").get<std::string>() == "numeric" ? FeatureKind::Numeric : FeatureKind::Categorical;
    c.offset = jc.at("offset").get<std::size_t>();
    if (c.kind == FeatureKind::Numeric) {
      c.mean = jc.at("mean").get<double>();
      c.scale = jc.at("scale").get<double>();
      c.constant = jc.at("constant").get<bool>();
    } else {
      c.categories = jc.at("categories").get<std::vector<std::string>>();
    }
    e.columns.push_back(std::move(c));
  }
  e.target_kind = j.at("target_kind").get<std::string>() == "binary" ? TargetKind::Binary : TargetKind::Regression;
  e.regression_threshold = j.at("regression_threshold").get<double>();
  return e;
}

std::vector<int> EncodedDataset::target_binary() const {
  std::vector<int> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    const double t = target(static_cast<Eigen::Index>(i));
    out[i] = encoder.target_kind == TargetKind::Binary ? (t > 0.5 ? 1 : 0) : (t > encoder.regression_threshold ? 1 : 0);
  }
  return out;
}

Vector EncodedDataset::a_vector() const {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
  return v;
}

EncoderState fit_encoder(const DatasetSpec& spec, const RawTable& raw, std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw InvalidArgument("cannot fit an encoder on zero rows");
  const std::string source = spec.csv_path.empty() ? spec.name : spec.csv_path.string();
  EncoderState enc;
  enc.target_kind = spec.target_kind;
  enc.regression_threshold = spec.regression_threshold;
  std::size_t offset = 0;
  for (const ColumnSpec& cs : spec.features) {
    const std::size_t col = raw.table.column(cs.name, source);
    EncodedColumn c;
    c.name = cs.name;
    c.kind = cs.kind;
    c.offset = offset;
    if (cs.kind == FeatureKind::Categorical) {
      std::set<std::string> cats;
      for (std::size_t r : raw.kept) cats.insert(csv::trim(raw.table.rows[r][col]));
      c.categories.assign(cats.begin(), cats.end());
    } else {
      double sum = 0.0;
      std::vector<double> values;
      values.reserve(fit_rows.size());
      for (std::size_t i : fit_rows) {
        const std::size_t r = raw.kept.at(i);
        const auto v = parse_number(raw.table.rows[r][col]);
        if (!v) {
          throw ParseError(where(raw.table, r, source) + ": column '" + cs.name + "' value '" + raw.table.rows[r][col] +
                           "' is not numeric");
        }
        values.push_back(*v);
        sum += *v;
      }
      c.mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - c.mean) * (v - c.mean);
      const double sd = std::sqrt(ss / static_cast<double>(values.size()));
      c.constant = !(sd > 1e-12);
      c.scale = c.constant ? 1.0 : sd;
    }
    offset += c.width();
    enc.columns.push_back(std::move(c));
  }
  return enc;
}

EncodedDataset encode(const EncoderState& encoder, const RawTable& raw, std::span<const std::size_t> rows) {
  EncodedDataset ds;
  ds.encoder = encoder;
  const auto n = static_cast<Eigen::Index>(rows.size());
  ds.x = Matrix::Zero(n, static_cast<Eigen::Index>(encoder.width()));
  ds.target.resize(n);
  std::vector<std::size_t> col_index;
  for (const auto& c : encoder.columns) col_index.push_back(raw.table.column(c.name));

  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t k = rows[static_cast<std::size_t>(i)];
    const std::size_t r = raw.kept.at(k);
    const auto& row = raw.table.rows[r];
    for (std::size_t ci = 0; ci < encoder.columns.size(); ++ci) {
      const EncodedColumn& c = encoder.columns[ci];
      const std::string cell = csv::trim(row[col_index[ci]]);
      if (c.kind == FeatureKind::Numeric) {
        const auto v = parse_number(cell);
        if (!v) throw ParseError(where(raw.table, r, "row") + ": column '" + c.name + "' value '" + cell + "' is not numeric");
        ds.x(i, static_cast<Eigen::Index>(c.offset)) = (*v - c.mean) / c.scale;
      } else {
        const auto it = std::lower_bound(c.categories.begin(), c.categories.end(), cell);
        if (it == c.categories.end() || *it != cell) {
          throw ParseError("column '" + c.name + "' has unknown category '" + cell + "'");
        }
        ds.x(i, static_cast<Eigen::Index>(c.offset + static_cast<std::size_t>(it - c.categories.begin()))) = 1.0;
      }
    }
    ds.target(i) = raw.target[k];
    ds.label.push_back(raw.label[k]);
    ds.a.push_back(raw.a[k]);
  }
  ds.bounds = compute_bounds(ds.x, encoder);
  return ds;
}

EncodedDataset load_and_encode(const DatasetSpec& spec) {
  const RawTable raw = load_table(spec);
  std::vector<std::size_t> all(raw.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return encode(fit_encoder(spec, raw, all), raw, all);
}

std::string decode_category(const EncodedDataset& ds, std::size_t row, std::string_view column) {
  for (const auto& c : ds.encoder.columns) {
    if (c.name != column) continue;
    if (c.kind != FeatureKind::Categorical) throw InvalidArgument("column '" + c.name + "' is not categorical");
    for (std::size_t k = 0; k < c.categories.size(); ++k) {
      if (ds.x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c.offset + k)) == 1.0) return c.categories[k];
    }
    throw InvalidArgument("row " + std::to_string(row) + " has no active category for '" + c.name + "'");
  }
  throw InvalidArgument("unknown column '" + std::string(column) + "'");
}

std::vector<FeatureBounds> compute_bounds(const Matrix& x, const EncoderState& encoder) {
  std::vector<FeatureBounds> b(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (x.rows() > 0) b[static_cast<std::size_t>(j)] = {x.col(j).minCoeff(), x.col(j).maxCoeff()};
  }
  for (const auto& c : encoder.columns) {
    if (c.kind != FeatureKind::Categorical) continue;
    for (std::size_t k = 0; k < c.categories.size(); ++k) b[c.offset + k] = {0.0, 1.0};
  }
  return b;
}

// ---------------------------------------------------------------------------
// Splitting

Split stratified_split(std::span<const int> label, std::span<const int> a, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in (0, 1)");
  if (label.size() != a.size()) throw InvalidArgument("label and group vectors differ in length");
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < label.size(); ++i) strata[label[i] * 2 + a[i]].push_back(i);

  std::mt19937_64 rng(seed);
  Split s;
  s.seed = seed;
  for (auto& [key, members] : strata) {
    if (members.size() < 2) {
      throw InvalidArgument("stratum (label=" + std::to_string(key / 2) + ", a=" + std::to_string(key % 2) + ") has " +
                            std::to_string(members.size()) + " row(s); cannot split");
    }
    std::shuffle(members.begin(), members.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Split split(const EncodedDataset& ds, double test_fraction, std::uint64_t seed) {
  return stratified_split(ds.label, ds.a, test_fraction, seed);
}

EncodedDataset subset(const EncodedDataset& ds, std::span<const std::size_t> rows) {
  EncodedDataset out;
  out.encoder = ds.encoder;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.x.resize(n, ds.x.cols());
  out.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    if (src >= ds.x.rows()) throw InvalidArgument("subset row index out of range");
    out.x.row(i) = ds.x.row(src);
    out.target(i) = ds.target(src);
    out.label.push_back(ds.label[static_cast<std::size_t>(src)]);
    out.a.push_back(ds.a[static_cast<std::size_t>(src)]);
  }
  out.bounds = compute_bounds(out.x, out.encoder);
  return out;
}

PreparedData prepare(const DatasetSpec& spec, double test_fraction, std::uint64_t seed) {
  return prepare(spec, load_table(spec), test_fraction, seed);
}

PreparedData prepare(const DatasetSpec& spec, const RawTable& raw, double test_fraction, std::uint64_t seed) {
  PreparedData p;
  p.split = stratified_split(raw.label, raw.a, test_fraction, seed);
  const EncoderState enc = fit_encoder(spec, raw, p.split.train);
  p.train = encode(enc, raw, p.split.train);
  p.test = encode(enc, raw, p.split.test);
  p.dropped_missing = raw.dropped_missing;
  p.dropped_filter = raw.dropped_filter;
  return p;
}

// ---------------------------------------------------------------------------
// Synthetic data

EncodedDataset synthetic_biased(std::size_t n, double bias_strength, std::uint64_t seed) {
  if (n < 100) throw InvalidArgument("synthetic dataset needs at least 100 rows");
  if (!(bias_strength >= 0.0 && bias_strength <= 1.0)) throw InvalidArgument("bias strength must lie in [0, 1]");
  constexpr double kLabelShift = 0.2;
  constexpr double kClusterOffset = 0.3;
  constexpr double kProxyOffset = 1.5;
  static const std::vector<std::string> kNames{"core_1", "core_2", "proxy", "noise_1", "noise_2"};

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  EncodedDataset ds;
  const auto rows = static_cast<Eigen::Index>(n);
  ds.x.resize(rows, static_cast<Eigen::Index>(kNames.size()));
  ds.target.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int a = coin(rng) ? 1 : 0;
    const double p_positive = 0.5 + kLabelShift * bias_strength * (a == 0 ? 1.0 : -1.0);
    const int y = unit(rng) < p_positive ? 1 : 0;
    const double cluster = y == 1 ? kClusterOffset : -kClusterOffset;
    ds.x(i, 0) = cluster + gauss(rng);
    ds.x(i, 1) = cluster + gauss(rng);
    ds.x(i, 2) = kProxyOffset * (2.0 * a - 1.0) + gauss(rng);
    ds.x(i, 3) = gauss(rng);
    ds.x(i, 4) = gauss(rng);
    ds.target(i) = y;
    ds.label.push_back(y);
    ds.a.push_back(a);
  }
  std::size_t offset = 0;
  for (const auto& name : kNames) {
    EncodedColumn c;
    c.name = name;
    c.offset = offset++;
    ds.encoder.columns.push_back(c);
  }
  ds.bounds = compute_bounds(ds.x, ds.encoder);
  return ds;
}

// ---------------------------------------------------------------------------
// Encoded CSV

void write_encoded_csv(const EncodedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  std::vector<std::string> header = ds.encoder.feature_names();
  header.insert(header.end(), {"target", "label", "a"});
  out << csv::join_row(header) << '\n';
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::string> fields;
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) fields.push_back(format_double(ds.x(static_cast<Eigen::Index>(i), j)));
    fields.push_back(format_double(ds.target(static_cast<Eigen::Index>(i))));
    fields.push_back(std::to_string(ds.label[i]));
    fields.push_back(std::to_string(ds.a[i]));
    out << csv::join_row(fields) << '\n';
  }
  if (!out) throw ParseError("failed writing '" + path.string() + "'");
}

EncodedDataset read_encoded_csv(const std::filesystem::path& path, const EncoderState& encoder) {
  const csv::Table t = csv::read(path);
  const auto names = encoder.feature_names();
  if (t.header.size() != names.size() + 3) {
    throw ParseError(path.string() + ": expected " + std::to_string(names.size() + 3) + " columns, found " +
                     std::to_string(t.header.size()));
  }
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (t.header[j] != names[j]) throw ParseError(path.string() + ": column " + std::to_string(j + 1) + " is '" +
                                                  t.header[j] + "', encoder expects '" + names[j] + "'");
  }
  EncodedDataset ds;
  ds.encoder = encoder;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto d = static_cast<Eigen::Index>(names.size());
  ds.x.resize(n, d);
  ds.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    auto num = [&](std::size_t j) {
      const auto v = parse_number(row[j]);
      if (!v) throw ParseError(where(t, static_cast<std::size_t>(i), path.string()) + ": '" + row[j] + "' is not numeric");
      return *v;
    };
    for (Eigen::Index j = 0; j < d; ++j) ds.x(i, j) = num(static_cast<std::size_t>(j));
    ds.target(i) = num(names.size());
    ds.label.push_back(static_cast<int>(num(names.size() + 1)));
    ds.a.push_back(static_cast<int>(num(names.size() + 2)));
  }
  ds.bounds = compute_bounds(ds.x, encoder);
  return ds;
}

}  // namespace feedread::data
