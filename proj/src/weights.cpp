#include "feedread/weights.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace feedread::weights {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> layer_names(std::size_t shared) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < shared; ++i) names.push_back("shared_" + std::to_string(i));
  names.push_back("target");
  names.push_back("adversary");
  return names;
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::istringstream next(const std::string& expected_key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ss(line);
      if (!expected_key.empty()) {
        std::string key;
        ss >> key;
        if (key != expected_key) fail("expected '" + expected_key + "', found '" + key + "'");
      }
      return ss;
    }
    fail("unexpected end of file (expected '" + expected_key + "')");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

nn::HeadKind parse_head(const std::string& text, const LineReader& reader) {
  if (text == "softmax") return nn::HeadKind::SoftmaxClassifier;
  if (text == "linear") return nn::HeadKind::LinearRegressor;
  reader.fail("unknown head kind '" + text + "'");
}

void read_values(std::istringstream& ss, double* out, Eigen::Index count, const LineReader& reader) {
  for (Eigen::Index i = 0; i < count; ++i) {
    std::string token;
    if (!(ss >> token)) reader.fail("too few values");
    try {
      std::size_t used = 0;
      out[i] = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      reader.fail("bad number '" + token + "'");
    }
  }
  std::string extra;
  if (ss >> extra) reader.fail("too many values");
}

}  // namespace

void write(std::ostream& out, const nn::NetworkState& state) {
  const auto& spec = state.spec;
  out << kMagic << '\n';
  out << "input_dim " << spec.input_dim << '\n';
  out << "hidden";
  for (auto w : spec.hidden_layers) out << ' ' << w;
  out << '\n';
  out << "target_head " << (spec.target_head == nn::HeadKind::SoftmaxClassifier ? "softmax" : "linear") << '\n';
  out << "adversary_head softmax\n";
  out << "lambda " << fmt17(spec.lambda) << '\n';
  const auto names = layer_names(state.params.shared.size());
  const auto layers = state.params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const nn::Dense& d = *layers[l];
    out << "layer " << names[l] << ' ' << d.weight.rows() << ' ' << d.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < d.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.weight.cols(); ++c) out << (c ? " " : "") << fmt17(d.weight(r, c));
      out << '\n';
    }
    out << "bias";
    for (Eigen::Index r = 0; r < d.bias.size(); ++r) out << ' ' << fmt17(d.bias(r));
    out << '\n';
  }
}

void save(const std::filesystem::path& path, const nn::NetworkState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  write(out, state);
  if (!out) throw ParseError("failed writing '" + path.string() + "'");
}

nn::NetworkState read(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  {
    std::string magic;
    if (!std::getline(in, magic)) reader.fail("empty file");
    if (!magic.empty() && magic.back() == '\r') magic.pop_back();
    if (magic != kMagic) reader.fail("not a weight dump (missing '" + std::string(kMagic) + "' header)");
  }
  nn::NetworkSpec spec;
  {
    auto ss = reader.next("input_dim");
    if (!(ss >> spec.input_dim)) reader.fail("bad input_dim");
  }
  {
    auto ss = reader.next("hidden");
    std::size_t w = 0;
    while (ss >> w) spec.hidden_layers.push_back(w);
  }
  {
    auto ss = reader.next("target_head");
    std::string kind;
    ss >> kind;
    spec.target_head = parse_head(kind, reader);
  }
  {
    auto ss = reader.next("adversary_head");
    std::string kind;
    ss >> kind;
    spec.adversary_head = parse_head(kind, reader);
  }
  {
    auto ss = reader.next("lambda");
    if (!(ss >> spec.lambda)) reader.fail("bad lambda");
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    reader.fail(e.what());
  }

  nn::NetworkState state = nn::init_network(spec, 0);
  const auto names = layer_names(state.params.shared.size());
  auto layers = state.params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    nn::Dense& d = *layers[l];
    auto header = reader.next("layer");
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    header >> name >> rows >> cols;
    if (name != names[l]) reader.fail("expected layer '" + names[l] + "', found '" + name + "'");
    if (rows != d.weight.rows() || cols != d.weight.cols()) reader.fail("layer '" + name + "' has the wrong shape");
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      auto ss = reader.next("");
      read_values(ss, row.data(), cols, reader);
      for (Eigen::Index c = 0; c < cols; ++c) d.weight(r, c) = row[static_cast<std::size_t>(c)];
    }
    auto bias = reader.next("bias");
    read_values(bias, d.bias.data(), d.bias.size(), reader);
  }
  if (!state.params.all_finite()) reader.fail("non-finite parameter");
  state.adam.first_moment = state.params.zeros_like();
  state.adam.second_moment = state.params.zeros_like();
  state.adam.step = 0;
  return state;
}

nn::NetworkState load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open weight file '" + path.string() + "'");
  return read(in, path.string());
}

}  // namespace feedread::weights
