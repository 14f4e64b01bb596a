#include "correg/ndgrad/graph.hpp"

namespace correg::ndgrad {

Graph& Node::graph() const {
  if (!graph_) throw std::logic_error("Node: empty handle");
  return *graph_;
}

Node Graph::leaf(Array value, bool requires_grad) {
  NodeData nd;
  nd.grad = Array::zeros_like(value);
  nd.value = std::move(value);
  nd.requires_grad = requires_grad;
  nd.index = nodes_.size();
  nodes_.push_back(std::move(nd));
  return Node(this, &nodes_.back());
}

Node Graph::variable(Array value) { return leaf(std::move(value), true); }

Node Graph::constant(Array value) { return leaf(std::move(value), false); }

Node Graph::detach(Node n) {
  if (!owns(n)) throw std::logic_error("Graph::detach: node from another graph");
  return leaf(n.value(), false);
}

Node Graph::make(Array value, const std::vector<Node>& parents, BackwardFn backward) {
  bool needs_grad = false;
  std::vector<std::size_t> parent_idx;
  parent_idx.reserve(parents.size());
  for (const Node& p : parents) {
    if (!owns(p)) throw std::logic_error("Graph::make: parent from another graph");
    needs_grad = needs_grad || p.requires_grad();
    parent_idx.push_back(p.index());
  }
  NodeData nd;
  nd.grad = Array::zeros_like(value);
  nd.value = std::move(value);
  nd.requires_grad = needs_grad;
  nd.parents = std::move(parent_idx);
  if (needs_grad) nd.backward = std::move(backward);
  nd.index = nodes_.size();
  nodes_.push_back(std::move(nd));
  return Node(this, &nodes_.back());
}

void Graph::backward(Node root) {
  if (!owns(root)) throw std::logic_error("Graph::backward: node from another graph");
  if (root.value().rank() != 0) {
    throw std::invalid_argument("Graph::backward: root must be scalar-shaped, got " +
                                root.value().shape_str());
  }

  const std::size_t r = root.index();

  // Adjoints live in a pass-local buffer so that repeated backward calls
  // compose additively in the public grad slots.
  std::vector<Array> adj;
  adj.reserve(r + 1);
  for (std::size_t i = 0; i <= r; ++i) adj.push_back(Array::zeros_like(nodes_[i].value));
  adj[r][0] = 1.0;

  std::vector<Array*> parent_adj;
  for (std::size_t i = r + 1; i-- > 0;) {
    NodeData& nd = nodes_[i];
    if (!nd.backward) continue;
    parent_adj.clear();
    for (std::size_t p : nd.parents) parent_adj.push_back(&adj[p]);
    nd.backward(adj[i], parent_adj);
  }

  for (std::size_t i = 0; i <= r; ++i) {
    NodeData& nd = nodes_[i];
    if (!nd.requires_grad) continue;
    for (std::size_t k = 0; k < nd.grad.size(); ++k) nd.grad[k] += adj[i][k];
  }
}

void Graph::zero_grad() {
  for (NodeData& nd : nodes_) nd.grad.fill(0.0);
}

}  // namespace correg::ndgrad
