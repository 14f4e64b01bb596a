#include "correg/model/mlp.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "correg/rng.hpp"

namespace correg::model {

namespace nd = correg::ndgrad;

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + name + "' (expected tanh or relu)");
}

const char* to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

MlpRegressor::MlpRegressor(std::vector<std::size_t> layer_dims, Activation activation,
                           std::uint64_t seed)
    : layer_dims_(std::move(layer_dims)), activation_(activation) {
  if (layer_dims_.size() < 2) {
    throw std::invalid_argument("MlpRegressor: need at least input and embedding dims");
  }
  for (std::size_t d : layer_dims_) {
    if (d < 1) throw std::invalid_argument("MlpRegressor: layer dims must be >= 1");
  }

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    const std::size_t d_in = layer_dims_[l], d_out = layer_dims_[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    std::vector<double> w(d_in * d_out);
    for (auto& x : w) x = rng.uniform(-scale, scale);
    weights_.push_back(nd::Array::matrix(d_in, d_out, std::move(w)));
    biases_.push_back(nd::Array::zeros({d_out}));
  }
  const std::size_t emb = layer_dims_.back();
  const double scale = 1.0 / std::sqrt(static_cast<double>(emb));
  std::vector<double> hw(emb);
  for (auto& x : hw) x = rng.uniform(-scale, scale);
  head_weight_ = nd::Array::vector(std::move(hw));
  head_bias_ = nd::Array::scalar(0.0);
}

MlpRegressor::Forward MlpRegressor::forward(nd::Graph& g, const nd::Array& inputs) const {
  if (inputs.rank() != 2 || inputs.cols() != input_dim()) {
    throw std::invalid_argument("MlpRegressor::forward: inputs " + inputs.shape_str() +
                                " do not match input dim " + std::to_string(input_dim()));
  }
  Forward out;
  std::vector<nd::Node> weight_nodes, bias_nodes;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weight_nodes.push_back(g.variable(weights_[l]));
    bias_nodes.push_back(g.variable(biases_[l]));
    out.param_nodes.push_back(weight_nodes.back());
    out.param_nodes.push_back(bias_nodes.back());
  }
  nd::Node head_w = g.variable(head_weight_);
  nd::Node head_b = g.variable(head_bias_);
  out.param_nodes.push_back(head_w);
  out.param_nodes.push_back(head_b);

  const std::size_t m = inputs.rows(), d = inputs.cols();
  std::vector<nd::Node> preds;
  preds.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = inputs.at(i, j);
    nd::Node h = g.constant(nd::Array::vector(std::move(row)));
    for (std::size_t l = 0; l < weight_nodes.size(); ++l) {
      nd::Node z = nd::add(nd::matmul(h, weight_nodes[l]), bias_nodes[l]);
      h = activation_ == Activation::kTanh ? nd::tanh(z) : nd::relu(z);
    }
    out.embeddings.push_back(h);
    preds.push_back(nd::add(nd::dot(head_w, h), head_b));
  }
  out.predictions = nd::stack(preds);
  return out;
}

std::vector<double> MlpRegressor::predict(const nd::Array& inputs) const {
  if (inputs.rank() != 2 || inputs.cols() != input_dim()) {
    throw std::invalid_argument("MlpRegressor::predict: inputs " + inputs.shape_str() +
                                " do not match input dim " + std::to_string(input_dim()));
  }
  const std::size_t m = inputs.rows(), d = inputs.cols();
  std::vector<double> out(m);
  std::vector<double> h, z;
  for (std::size_t i = 0; i < m; ++i) {
    h.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) h[j] = inputs.at(i, j);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const nd::Array& w = weights_[l];
      const std::size_t n = w.cols();
      // same accumulation order as the graph matmul so values match bitwise
      z.assign(n, 0.0);
      for (std::size_t col = 0; col < n; ++col) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.rows(); ++k) s += h[k] * w.at(k, col);
        z[col] = s + biases_[l][col];
      }
      for (std::size_t col = 0; col < n; ++col) {
        z[col] = activation_ == Activation::kTanh ? std::tanh(z[col])
                                                  : (z[col] > 0.0 ? z[col] : 0.0);
      }
      h = z;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) s += head_weight_[k] * h[k];
    out[i] = s + head_bias_[0];
  }
  return out;
}

std::vector<nd::Array*> MlpRegressor::parameters() {
  std::vector<nd::Array*> p;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    p.push_back(&weights_[l]);
    p.push_back(&biases_[l]);
  }
  p.push_back(&head_weight_);
  p.push_back(&head_bias_);
  return p;
}

std::vector<const nd::Array*> MlpRegressor::parameters() const {
  std::vector<const nd::Array*> p;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    p.push_back(&weights_[l]);
    p.push_back(&biases_[l]);
  }
  p.push_back(&head_weight_);
  p.push_back(&head_bias_);
  return p;
}

namespace {

void write_array(std::ostream& os, const char* name, const nd::Array& a) {
  os << "param " << name;
  for (std::size_t d : a.shape()) os << ' ' << d;
  os << '\n';
  char buf[40];
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%a", a[i]);
    os << buf << '\n';
  }
}

std::vector<double> read_values(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated values");
    v[i] = std::strtod(line.c_str(), nullptr);
  }
  return v;
}

}  // namespace

void MlpRegressor::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  os << "mlp-checkpoint 1\n";
  os << "activation " << to_string(activation_) << '\n';
  os << "dims";
  for (std::size_t d : layer_dims_) os << ' ' << d;
  os << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    write_array(os, ("w" + std::to_string(l)).c_str(), weights_[l]);
    write_array(os, ("b" + std::to_string(l)).c_str(), biases_[l]);
  }
  write_array(os, "head_w", head_weight_);
  write_array(os, "head_b", head_bias_);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

MlpRegressor MlpRegressor::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string line, word;

  std::getline(is, line);
  if (line != "mlp-checkpoint 1") {
    throw std::runtime_error("checkpoint: bad header in " + path.string());
  }

  MlpRegressor m;
  std::getline(is, line);
  {
    std::istringstream ss(line);
    ss >> word;
    std::string act;
    ss >> act;
    if (word != "activation") throw std::runtime_error("checkpoint: expected activation line");
    m.activation_ = activation_from_string(act);
  }
  std::getline(is, line);
  {
    std::istringstream ss(line);
    ss >> word;
    if (word != "dims") throw std::runtime_error("checkpoint: expected dims line");
    std::size_t d;
    while (ss >> d) m.layer_dims_.push_back(d);
    if (m.layer_dims_.size() < 2) throw std::runtime_error("checkpoint: bad dims");
  }

  auto read_param = [&](const std::string& expect_name) {
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated");
    std::istringstream ss(line);
    std::string tag, name;
    ss >> tag >> name;
    if (tag != "param" || name != expect_name) {
      throw std::runtime_error("checkpoint: expected param " + expect_name + ", got '" +
                               line + "'");
    }
    std::vector<std::size_t> shape;
    std::size_t d;
    while (ss >> d) shape.push_back(d);
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    std::vector<double> vals = read_values(is, n);
    if (shape.empty()) return nd::Array::scalar(vals[0]);
    if (shape.size() == 1) return nd::Array::vector(std::move(vals));
    return nd::Array::matrix(shape[0], shape[1], std::move(vals));
  };

  for (std::size_t l = 0; l + 1 < m.layer_dims_.size(); ++l) {
    m.weights_.push_back(read_param("w" + std::to_string(l)));
    m.biases_.push_back(read_param("b" + std::to_string(l)));
    if (m.weights_.back().rows() != m.layer_dims_[l] ||
        m.weights_.back().cols() != m.layer_dims_[l + 1]) {
      throw std::runtime_error("checkpoint: weight shape mismatch at layer " +
                               std::to_string(l));
    }
  }
  m.head_weight_ = read_param("head_w");
  m.head_bias_ = read_param("head_b");
  return m;
}

}  // namespace correg::model
