#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "correg/ndgrad/array.hpp"

namespace correg::ndgrad {

class Graph;

// Pushes this node's adjoint into the adjoint slots of its parents.
using BackwardFn = std::function<void(const Array& self_adj, const std::vector<Array*>& parent_adj)>;

// One tape entry: forward value, gradient slot of identical shape, parent
// indices and the local backward rule. Creation order is the topological
// order used by Graph::backward.
struct NodeData {
  Array value;
  Array grad;
  bool requires_grad = false;
  std::vector<std::size_t> parents;
  BackwardFn backward;
  std::size_t index = 0;
};

// Cheap handle into a Graph's node arena. Valid only while the graph lives.
class Node {
 public:
  Node() = default;

  const Array& value() const { return data().value; }
  const Array& grad() const { return data().grad; }
  bool requires_grad() const { return data().requires_grad; }
  std::size_t index() const { return data().index; }
  double scalar_value() const { return data().value.scalar_value(); }

  Graph& graph() const;
  bool valid() const { return data_ != nullptr; }

 private:
  friend class Graph;
  Node(Graph* g, NodeData* d) : graph_(g), data_(d) {}

  NodeData& data() const {
    if (!data_) throw std::logic_error("Node: empty handle");
    return *data_;
  }

  Graph* graph_ = nullptr;
  NodeData* data_ = nullptr;
};

// Dynamic tape rebuilt per training step. Nodes are appended in creation
// order, which is by construction a valid topological order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that accumulates gradient.
  Node variable(Array value);
  // Leaf that never accumulates gradient.
  Node constant(Array value);
  Node constant(double v) { return constant(Array::scalar(v)); }

  // New leaf with an identical value, requires_grad == false, no parents.
  Node detach(Node n);

  // Op-construction hook: requires_grad is inherited from the parents and
  // the backward rule is kept only when some parent requires gradient.
  Node make(Array value, const std::vector<Node>& parents, BackwardFn backward);

  // Reverse pass from a scalar-shaped root. Every requires_grad node at or
  // below the root receives dRoot/dNode added into its grad slot; repeated
  // calls without zero_grad accumulate additively.
  void backward(Node root);

  void zero_grad();

  std::size_t size() const { return nodes_.size(); }
  NodeData& node_at(std::size_t i) { return nodes_[i]; }

  bool owns(Node n) const { return n.graph_ == this; }

 private:
  Node leaf(Array value, bool requires_grad);

  std::deque<NodeData> nodes_;  // deque: stable addresses under growth
};

}  // namespace correg::ndgrad
