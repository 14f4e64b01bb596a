#pragma once

#include <cstddef>
#include <vector>

#include "correg/ndgrad/graph.hpp"

namespace correg::ndgrad {

// Guard applied to denominators in div, l2_norm, sqrt and the cosine
// similarity so degenerate inputs (constant batches, zero spread) produce
// finite values and zero gradients instead of NaN.
inline constexpr double kDenomEpsilon = 1e-12;

// Elementwise binary ops. Operand shapes must match, or one operand may be
// rank-0 and is broadcast over the other.
Node add(Node a, Node b);
Node sub(Node a, Node b);
Node mul(Node a, Node b);
Node div(Node a, Node b, double eps = kDenomEpsilon);

Node scalar_mul(double c, Node a);

// matmul accepts (m x k)·(k x n) -> (m x n), (m x k)·(k) -> (m) and
// (k)·(k x n) -> (n).
Node matmul(Node a, Node b);

// Reductions over all elements.
Node sum(Node a);
Node mean(Node a);
Node variance(Node a);  // population (1/n)

// Elementwise unary ops.
Node sqrt(Node a, double eps = kDenomEpsilon);
Node square(Node a);
Node abs(Node a);
Node relu(Node a);
Node max_with_zero(Node a);  // hinge form of relu
Node tanh(Node a);

// Rank-1 pair ops.
Node dot(Node a, Node b);
Node l2_norm(Node a, double eps = kDenomEpsilon);

// dot(a,b) / (|a||b|), composed from the guarded primitives. With eps == 0
// the guard is disabled and a zero-norm operand is an error.
Node cosine_similarity(Node a, Node b, double eps = kDenomEpsilon);

// Assembles rank-0 nodes into a rank-1 node (gradient routed back per slot).
Node stack(const std::vector<Node>& scalars);

// Selects elements of a rank-1 node; gradient scatters into the source.
Node gather(Node v, std::vector<std::size_t> indices);

// Alias for Graph::detach usable in expression position.
inline Node detach(Node n) { return n.graph().detach(n); }

}  // namespace correg::ndgrad
