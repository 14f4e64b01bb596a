#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "correg/ndgrad/ops.hpp"

namespace correg::model {

enum class Activation { kTanh, kRelu };

Activation activation_from_string(const std::string& name);
const char* to_string(Activation a);

// Fully-connected regressor with two heads sharing one backbone: the last
// hidden activation is the embedding fed to the similarity losses, and an
// affine head on top of it produces the scalar prediction.
//
// Parameters are owned as plain arrays; forward() binds them as fresh graph
// leaves each step (the tape is rebuilt per batch).
class MlpRegressor {
 public:
  // layer_dims: input -> hidden ... -> embedding size; weights start uniform
  // in +-1/sqrt(fan_in), biases at zero, deterministic per seed.
  MlpRegressor(std::vector<std::size_t> layer_dims, Activation activation,
               std::uint64_t seed);

  struct Forward {
    ndgrad::Node predictions;               // rank-1, one entry per input row
    std::vector<ndgrad::Node> embeddings;   // one rank-1 node per input row
    std::vector<ndgrad::Node> param_nodes;  // leaves, same order as parameters()
  };

  // inputs: rank-2 (m x input_dim). Predictions and embeddings live in g and
  // share the bound parameter leaves, so a loss on either backpropagates
  // into the backbone.
  Forward forward(ndgrad::Graph& g, const ndgrad::Array& inputs) const;

  // Graph-free forward pass; produces bit-identical values to forward().
  std::vector<double> predict(const ndgrad::Array& inputs) const;

  std::vector<ndgrad::Array*> parameters();
  std::vector<const ndgrad::Array*> parameters() const;

  const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
  Activation activation() const { return activation_; }
  std::size_t input_dim() const { return layer_dims_.front(); }
  std::size_t embedding_dim() const { return layer_dims_.back(); }

  // Text checkpoint with hex floats; load reproduces forward output bitwise.
  void save(const std::filesystem::path& path) const;
  static MlpRegressor load(const std::filesystem::path& path);

 private:
  MlpRegressor() = default;

  std::vector<std::size_t> layer_dims_;
  Activation activation_ = Activation::kTanh;
  std::vector<ndgrad::Array> weights_;  // (d_in x d_out) per layer
  std::vector<ndgrad::Array> biases_;   // (d_out) per layer
  ndgrad::Array head_weight_;           // (embedding_dim)
  ndgrad::Array head_bias_;             // scalar
};

}  // namespace correg::model
