#include "pnet/network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "pnet/baseline.hpp"
#include "pnet/errors.hpp"
#include "pnet/random.hpp"

namespace pnet {

std::string_view to_string(Task task) {
  return task == Task::regression ? "regression" : "classification";
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::implicit: return "implicit";
    case Activation::satlins: return "satlins";
    case Activation::tansig: return "tansig";
    case Activation::purelin: return "purelin";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  if (text == "regression") return Task::regression;
  if (text == "classification") return Task::classification;
  throw InputError("unknown task '" + std::string(text) + "'");
}

Activation parse_activation(std::string_view text) {
  if (text == "implicit") return Activation::implicit;
  if (text == "satlins") return Activation::satlins;
  if (text == "tansig") return Activation::tansig;
  if (text == "purelin" || text == "linear") return Activation::purelin;
  if (text == "softmax") return Activation::softmax;
  throw InputError("unknown activation '" + std::string(text) + "'");
}

std::vector<int> Network::layer_sizes() const {
  std::vector<int> sizes{input_dim};
  for (const auto& layer : layers) sizes.push_back(static_cast<int>(layer.size()));
  return sizes;
}

Eigen::Index Network::p_count() const {
  Eigen::Index count = 0;
  for (const auto& layer : layers) count += layer.p.size();
  return count;
}

void validate(const Network& net) {
  if (net.layers.empty()) throw DimensionError("network: needs at least one layer");
  if (net.input_dim < 1) throw DimensionError("network: input dimension must be positive");
  if (!(net.lambda >= 0.0) || !std::isfinite(net.lambda)) throw InputError("network: lambda must be finite and >= 0");
  if (net.inner_iters < 1) throw InputError("network: inner_iters must be >= 1");
  Eigen::Index fan_in = net.input_dim;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    const bool last = k + 1 == net.layers.size();
    if (layer.size() < 1 || layer.fan_in() != fan_in) {
      throw DimensionError("network: layer " + std::to_string(k + 1) + " weight matrix has wrong shape");
    }
    if (layer.activation == Activation::implicit) {
      if (layer.p.size() != layer.size()) {
        throw DimensionError("network: layer " + std::to_string(k + 1) + " needs one p per neuron");
      }
      for (double p : layer.p) {
        if (!(p >= kMinP && p <= kMaxP)) throw InputError("network: p value outside [1.01, 1e4]");
      }
    } else if (layer.p.size() != 0) {
      throw DimensionError("network: only implicit layers carry p values");
    }
    if (layer.activation == Activation::softmax && !last) {
      throw InputError("network: softmax is only allowed on the output layer");
    }
    fan_in = layer.size();
  }
  const bool softmax_out = net.layers.back().activation == Activation::softmax;
  if ((net.head == Task::classification) != softmax_out) {
    throw InputError("network: a classification head must end in a softmax layer and only then");
  }
}

Network init_network(std::span<const int> layer_sizes, Task head, double lambda, double initial_p,
                     std::uint64_t seed, std::optional<double> output_p) {
  if (layer_sizes.size() < 2) throw InputError("init_network: need input size and at least one layer");
  for (int size : layer_sizes) {
    if (size < 1) throw InputError("init_network: layer sizes must be positive");
  }
  if (!(initial_p >= kMinP && initial_p <= kMaxP)) throw InputError("init_network: initial p outside [1.01, 1e4]");
  if (output_p && !(*output_p >= kMinP && *output_p <= kMaxP)) {
    throw InputError("init_network: output p outside [1.01, 1e4]");
  }

  Rng rng(seed);
  Network net;
  net.input_dim = layer_sizes[0];
  net.lambda = lambda;
  net.head = head;
  const std::size_t m = layer_sizes.size() - 1;
  for (std::size_t k = 1; k <= m; ++k) {
    Layer layer;
    layer.weights.resize(layer_sizes[k], layer_sizes[k - 1] + 1);
    // Row-major draw order, so the stream maps to the file layout.
    for (Eigen::Index j = 0; j < layer.weights.rows(); ++j) {
      for (Eigen::Index i = 0; i < layer.weights.cols(); ++i) layer.weights(j, i) = rng.normal();
    }
    const bool last = k == m;
    if (last && head == Task::classification) {
      layer.activation = Activation::softmax;
    } else {
      layer.activation = Activation::implicit;
      layer.p = Eigen::VectorXd::Constant(layer_sizes[k], last && output_p ? *output_p : initial_p);
    }
    net.layers.push_back(std::move(layer));
  }
  validate(net);
  return net;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

namespace {

void refresh_thresholds(const Network& net, ForwardTrace& trace) {
  const std::size_t m = net.layers.size();
  const bool stale = trace.threshold_lambda != net.lambda || trace.thresholds.size() != m;
  trace.thresholds.resize(m);
  trace.threshold_p.resize(m);
  trace.threshold_lambda = net.lambda;
  for (std::size_t k = 0; k < m; ++k) {
    const Eigen::VectorXd& p = net.layers[k].p;
    if (!stale && trace.threshold_p[k].size() == p.size() && trace.threshold_p[k] == p) continue;
    trace.threshold_p[k] = p;
    trace.thresholds[k].resize(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const ActivationParams params = net.activation_params(k, j);
      trace.thresholds[k][j] = (params.p > 2.0 && params.lambda > 0.0) ? threshold_input(params) : 0.0;
    }
  }
}

}  // namespace

void forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x, ForwardTrace& trace) {
  if (x.size() != net.input_dim) {
    throw DimensionError("forward: input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(net.input_dim));
  }
  if (!x.allFinite()) throw InputError("forward: non-finite input");

  const std::size_t m = net.layers.size();
  refresh_thresholds(net, trace);
  trace.activations.resize(m);
  trace.outputs.resize(m + 1);
  trace.outputs[0] = x;
  for (std::size_t k = 0; k < m; ++k) {
    const Layer& layer = net.layers[k];
    const Eigen::VectorXd& prev = trace.outputs[k];
    Eigen::VectorXd& a = trace.activations[k];
    Eigen::VectorXd& v = trace.outputs[k + 1];
    a.noalias() = layer.weights.rightCols(layer.fan_in()) * prev;
    a += layer.weights.col(0);
    v.resize(a.size());
    switch (layer.activation) {
      case Activation::implicit:
        for (Eigen::Index j = 0; j < a.size(); ++j) {
          v[j] = evaluate(a[j], net.activation_params(k, j), trace.thresholds[k][j]);
        }
        break;
      case Activation::softmax:
        v = softmax(a);
        break;
      default:
        for (Eigen::Index j = 0; j < a.size(); ++j) v[j] = fixed_eval(layer.activation, a[j]);
        break;
    }
  }
}

ForwardTrace forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  ForwardTrace trace;
  forward(net, x, trace);
  return trace;
}

Eigen::VectorXd predict(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return forward(net, x).output();
}

namespace {

constexpr std::string_view kMagic = "pnet-model";
constexpr int kFormatVersion = 1;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double to_double(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + text + "'", line);
  }
}

long to_long(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const long value = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ParseError("not an integer: '" + text + "'", line);
  }
}

}  // namespace

void save_network(const Network& net, std::ostream& out) {
  validate(net);
  out << std::setprecision(17);
  out << kMagic << ',' << kFormatVersion << '\n';
  out << "input_dim," << net.input_dim << '\n';
  out << "head," << to_string(net.head) << '\n';
  out << "lambda," << net.lambda << '\n';
  out << "inner_iters," << net.inner_iters << '\n';
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    out << "layer," << k + 1 << ',' << to_string(layer.activation) << ',' << layer.weights.rows() << ','
        << layer.weights.cols() << '\n';
    out << "weights," << k + 1;
    for (Eigen::Index j = 0; j < layer.weights.rows(); ++j) {
      for (Eigen::Index i = 0; i < layer.weights.cols(); ++i) out << ',' << layer.weights(j, i);
    }
    out << '\n';
    if (layer.activation == Activation::implicit) {
      out << "p," << k + 1;
      for (double p : layer.p) out << ',' << p;
      out << '\n';
    }
  }
}

Network load_network(std::istream& in) {
  Network net;
  std::string line;
  std::size_t line_no = 0;
  bool seen_magic = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string& key = fields[0];
    if (!seen_magic) {
      if (key != kMagic || fields.size() != 2) throw ParseError("missing pnet-model header", line_no);
      if (to_long(fields[1], line_no) != kFormatVersion) throw ParseError("unsupported model version", line_no);
      seen_magic = true;
      continue;
    }
    auto require = [&](std::size_t n) {
      if (fields.size() != n) throw ParseError("'" + key + "' expects " + std::to_string(n - 1) + " fields", line_no);
    };
    auto layer_at = [&](const std::string& text) -> Layer& {
      const long k = to_long(text, line_no);
      if (k < 1 || static_cast<std::size_t>(k) > net.layers.size()) throw ParseError("unknown layer index", line_no);
      return net.layers[k - 1];
    };
    if (key == "input_dim") {
      require(2);
      net.input_dim = static_cast<int>(to_long(fields[1], line_no));
    } else if (key == "head") {
      require(2);
      net.head = parse_task(fields[1]);
    } else if (key == "lambda") {
      require(2);
      net.lambda = to_double(fields[1], line_no);
    } else if (key == "inner_iters") {
      require(2);
      net.inner_iters = static_cast<int>(to_long(fields[1], line_no));
    } else if (key == "layer") {
      require(5);
      if (to_long(fields[1], line_no) != static_cast<long>(net.layers.size()) + 1) {
        throw ParseError("layers must be listed in order", line_no);
      }
      const long rows = to_long(fields[3], line_no);
      const long cols = to_long(fields[4], line_no);
      if (rows < 1 || cols < 2) throw ParseError("bad layer shape", line_no);
      Layer layer;
      layer.activation = parse_activation(fields[2]);
      layer.weights = Eigen::MatrixXd::Zero(rows, cols);
      net.layers.push_back(std::move(layer));
    } else if (key == "weights") {
      if (fields.size() < 2) throw ParseError("weights record without layer index", line_no);
      Layer& layer = layer_at(fields[1]);
      require(2 + static_cast<std::size_t>(layer.weights.size()));
      std::size_t f = 2;
      for (Eigen::Index j = 0; j < layer.weights.rows(); ++j) {
        for (Eigen::Index i = 0; i < layer.weights.cols(); ++i) layer.weights(j, i) = to_double(fields[f++], line_no);
      }
    } else if (key == "p") {
      if (fields.size() < 2) throw ParseError("p record without layer index", line_no);
      Layer& layer = layer_at(fields[1]);
      require(2 + static_cast<std::size_t>(layer.weights.rows()));
      layer.p.resize(layer.weights.rows());
      for (Eigen::Index j = 0; j < layer.p.size(); ++j) layer.p[j] = to_double(fields[2 + j], line_no);
    } else {
      throw ParseError("unknown record '" + key + "'", line_no);
    }
  }
  if (!seen_magic) throw ParseError("empty model file", 0);
  try {
    validate(net);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return net;
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_network(net, out);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load_network(in);
}

}  // namespace pnet
