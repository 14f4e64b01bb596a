#include "correg/ndgrad/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace correg::ndgrad {

namespace {

// Which side of a binary elementwise op broadcasts.
enum class Bcast { kNone, kLeftScalar, kRightScalar };

Bcast binary_bcast(const char* op, const Array& a, const Array& b) {
  if (a.same_shape(b)) return Bcast::kNone;
  if (a.rank() == 0) return Bcast::kLeftScalar;
  if (b.rank() == 0) return Bcast::kRightScalar;
  throw ShapeMismatch(op, a.shape_str(), b.shape_str());
}

// Element access once shapes were validated: a rank-0 operand repeats.
double bval(const Array& a, std::size_t i) { return a[a.size() == 1 ? 0 : i]; }

// Accumulate an adjoint into dst, sum-reducing when dst is the broadcast
// scalar side.
void accumulate(Array& dst, const Array& adj, bool reduce) {
  if (reduce && dst.size() == 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < adj.size(); ++i) s += adj[i];
    dst[0] += s;
    return;
  }
  for (std::size_t i = 0; i < adj.size(); ++i) dst[i] += adj[i];
}

Array output_like(const Array& a, const Array& b, Bcast bc) {
  return Array::zeros_like(bc == Bcast::kLeftScalar ? b : a);
}

double guarded(double denom, double eps) {
  if (std::fabs(denom) >= eps) return denom;
  return denom < 0.0 ? -eps : eps;
}

const Array* value_ptr(Node n) { return &n.value(); }

void check_rank1_pair(const char* op, const Array& a, const Array& b) {
  if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size()) {
    throw ShapeMismatch(op, a.shape_str(), b.shape_str());
  }
}

}  // namespace

Node add(Node a, Node b) {
  const Array &av = a.value(), &bv = b.value();
  const Bcast bc = binary_bcast("add", av, bv);
  Array out = output_like(av, bv, bc);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bval(av, i) + bval(bv, i);
  return a.graph().make(std::move(out), {a, b},
                        [bc](const Array& adj, const std::vector<Array*>& p) {
                          accumulate(*p[0], adj, bc == Bcast::kLeftScalar);
                          accumulate(*p[1], adj, bc == Bcast::kRightScalar);
                        });
}

Node sub(Node a, Node b) {
  const Array &av = a.value(), &bv = b.value();
  const Bcast bc = binary_bcast("sub", av, bv);
  Array out = output_like(av, bv, bc);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bval(av, i) - bval(bv, i);
  return a.graph().make(std::move(out), {a, b},
                        [bc](const Array& adj, const std::vector<Array*>& p) {
                          accumulate(*p[0], adj, bc == Bcast::kLeftScalar);
                          Array& db = *p[1];
                          if (bc == Bcast::kRightScalar && db.size() == 1) {
                            double s = 0.0;
                            for (std::size_t i = 0; i < adj.size(); ++i) s += adj[i];
                            db[0] -= s;
                          } else {
                            for (std::size_t i = 0; i < adj.size(); ++i) db[i] -= adj[i];
                          }
                        });
}

Node mul(Node a, Node b) {
  const Array &av = a.value(), &bv = b.value();
  const Bcast bc = binary_bcast("mul", av, bv);
  Array out = output_like(av, bv, bc);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bval(av, i) * bval(bv, i);
  const Array *pa = value_ptr(a), *pb = value_ptr(b);
  return a.graph().make(
      std::move(out), {a, b}, [bc, pa, pb](const Array& adj, const std::vector<Array*>& p) {
        Array &da = *p[0], &db = *p[1];
        if (bc == Bcast::kLeftScalar) {
          double s = 0.0;
          for (std::size_t i = 0; i < adj.size(); ++i) s += adj[i] * (*pb)[i];
          da[0] += s;
        } else {
          for (std::size_t i = 0; i < adj.size(); ++i) da[i] += adj[i] * bval(*pb, i);
        }
        if (bc == Bcast::kRightScalar) {
          double s = 0.0;
          for (std::size_t i = 0; i < adj.size(); ++i) s += adj[i] * (*pa)[i];
          db[0] += s;
        } else {
          for (std::size_t i = 0; i < adj.size(); ++i) db[i] += adj[i] * bval(*pa, i);
        }
      });
}

Node div(Node a, Node b, double eps) {
  const Array &av = a.value(), &bv = b.value();
  const Bcast bc = binary_bcast("div", av, bv);
  Array out = output_like(av, bv, bc);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bval(av, i) / guarded(bval(bv, i), eps);
  const Array *pa = value_ptr(a), *pb = value_ptr(b);
  return a.graph().make(
      std::move(out), {a, b}, [bc, pa, pb, eps](const Array& adj, const std::vector<Array*>& p) {
        Array &da = *p[0], &db = *p[1];
        for (std::size_t i = 0; i < adj.size(); ++i) {
          const double g = guarded(bval(*pb, i), eps);
          const double dda = adj[i] / g;
          const double ddb = -adj[i] * bval(*pa, i) / (g * g);
          da[bc == Bcast::kLeftScalar ? 0 : i] += dda;
          db[bc == Bcast::kRightScalar ? 0 : i] += ddb;
        }
      });
}

Node scalar_mul(double c, Node a) {
  Array out = Array::zeros_like(a.value());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.value()[i];
  return a.graph().make(std::move(out), {a},
                        [c](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < adj.size(); ++i) (*p[0])[i] += c * adj[i];
                        });
}

Node matmul(Node a, Node b) {
  const Array &av = a.value(), &bv = b.value();
  const Array *pa = value_ptr(a), *pb = value_ptr(b);

  if (av.rank() == 2 && bv.rank() == 2) {
    if (av.cols() != bv.rows()) throw ShapeMismatch("matmul", av.shape_str(), bv.shape_str());
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Array out = Array::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = av.at(i, kk);
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aik * bv.at(kk, j);
      }
    return a.graph().make(
        std::move(out), {a, b},
        [pa, pb, m, k, n](const Array& adj, const std::vector<Array*>& p) {
          Array &da = *p[0], &db = *p[1];
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const double g = adj[i * n + j];
              for (std::size_t kk = 0; kk < k; ++kk) {
                da[i * k + kk] += g * (*pb)[kk * n + j];
                db[kk * n + j] += g * (*pa)[i * k + kk];
              }
            }
        });
  }

  if (av.rank() == 2 && bv.rank() == 1) {
    if (av.cols() != bv.size()) throw ShapeMismatch("matmul", av.shape_str(), bv.shape_str());
    const std::size_t m = av.rows(), k = av.cols();
    Array out = Array::zeros({m});
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += av.at(i, kk) * bv[kk];
      out[i] = s;
    }
    return a.graph().make(std::move(out), {a, b},
                          [pa, pb, m, k](const Array& adj, const std::vector<Array*>& p) {
                            Array &da = *p[0], &db = *p[1];
                            for (std::size_t i = 0; i < m; ++i) {
                              const double g = adj[i];
                              for (std::size_t kk = 0; kk < k; ++kk) {
                                da[i * k + kk] += g * (*pb)[kk];
                                db[kk] += g * (*pa)[i * k + kk];
                              }
                            }
                          });
  }

  if (av.rank() == 1 && bv.rank() == 2) {
    if (av.size() != bv.rows()) throw ShapeMismatch("matmul", av.shape_str(), bv.shape_str());
    const std::size_t k = av.size(), n = bv.cols();
    Array out = Array::zeros({n});
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += av[kk] * bv.at(kk, j);
      out[j] = s;
    }
    return a.graph().make(std::move(out), {a, b},
                          [pa, pb, k, n](const Array& adj, const std::vector<Array*>& p) {
                            Array &da = *p[0], &db = *p[1];
                            for (std::size_t j = 0; j < n; ++j) {
                              const double g = adj[j];
                              for (std::size_t kk = 0; kk < k; ++kk) {
                                da[kk] += g * (*pb)[kk * n + j];
                                db[kk * n + j] += g * (*pa)[kk];
                              }
                            }
                          });
  }

  throw ShapeMismatch("matmul", av.shape_str(), bv.shape_str());
}

Node sum(Node a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
  return a.graph().make(Array::scalar(s), {a},
                        [](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < p[0]->size(); ++i) (*p[0])[i] += adj[0];
                        });
}

Node mean(Node a) {
  const std::size_t n = a.value().size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a.value()[i];
  return a.graph().make(Array::scalar(s / static_cast<double>(n)), {a},
                        [n](const Array& adj, const std::vector<Array*>& p) {
                          const double g = adj[0] / static_cast<double>(n);
                          for (std::size_t i = 0; i < n; ++i) (*p[0])[i] += g;
                        });
}

Node variance(Node a) {
  const Array& av = a.value();
  const std::size_t n = av.size();
  double mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) mu += av[i];
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (av[i] - mu) * (av[i] - mu);
  var /= static_cast<double>(n);
  const Array* pa = value_ptr(a);
  return a.graph().make(Array::scalar(var), {a},
                        [pa, mu, n](const Array& adj, const std::vector<Array*>& p) {
                          const double g = adj[0] * 2.0 / static_cast<double>(n);
                          for (std::size_t i = 0; i < n; ++i) (*p[0])[i] += g * ((*pa)[i] - mu);
                        });
}

Node sqrt(Node a, double eps) {
  const Array& av = a.value();
  Array out = Array::zeros_like(av);
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (av[i] < 0.0) {
      throw std::domain_error("sqrt: negative input at index " + std::to_string(i));
    }
    out[i] = std::sqrt(av[i]);
  }
  const Array* pa = value_ptr(a);
  return a.graph().make(std::move(out), {a},
                        [pa, eps](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < adj.size(); ++i) {
                            const double r = std::max(std::sqrt((*pa)[i]), eps);
                            (*p[0])[i] += adj[i] * 0.5 / r;
                          }
                        });
}

Node square(Node a) {
  const Array& av = a.value();
  Array out = Array::zeros_like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * av[i];
  const Array* pa = value_ptr(a);
  return a.graph().make(std::move(out), {a},
                        [pa](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < adj.size(); ++i)
                            (*p[0])[i] += adj[i] * 2.0 * (*pa)[i];
                        });
}

Node abs(Node a) {
  const Array& av = a.value();
  Array out = Array::zeros_like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::fabs(av[i]);
  const Array* pa = value_ptr(a);
  return a.graph().make(std::move(out), {a},
                        [pa](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < adj.size(); ++i) {
                            const double x = (*pa)[i];
                            // subgradient 0 at the kink
                            const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                            (*p[0])[i] += adj[i] * s;
                          }
                        });
}

Node relu(Node a) {
  const Array& av = a.value();
  Array out = Array::zeros_like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  const Array* pa = value_ptr(a);
  return a.graph().make(std::move(out), {a},
                        [pa](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < adj.size(); ++i)
                            if ((*pa)[i] > 0.0) (*p[0])[i] += adj[i];
                        });
}

Node max_with_zero(Node a) { return relu(a); }

Node tanh(Node a) {
  const Array& av = a.value();
  Array out = Array::zeros_like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  const Array* pa = value_ptr(a);
  return a.graph().make(std::move(out), {a},
                        [pa](const Array& adj, const std::vector<Array*>& p) {
                          for (std::size_t i = 0; i < adj.size(); ++i) {
                            const double t = std::tanh((*pa)[i]);
                            (*p[0])[i] += adj[i] * (1.0 - t * t);
                          }
                        });
}

Node dot(Node a, Node b) {
  const Array &av = a.value(), &bv = b.value();
  check_rank1_pair("dot", av, bv);
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const Array *pa = value_ptr(a), *pb = value_ptr(b);
  return a.graph().make(Array::scalar(s), {a, b},
                        [pa, pb](const Array& adj, const std::vector<Array*>& p) {
                          const double g = adj[0];
                          for (std::size_t i = 0; i < pa->size(); ++i) {
                            (*p[0])[i] += g * (*pb)[i];
                            (*p[1])[i] += g * (*pa)[i];
                          }
                        });
}

Node l2_norm(Node a, double eps) {
  const Array& av = a.value();
  if (av.rank() != 1) {
    throw std::invalid_argument("l2_norm: rank-1 operand required, got " + av.shape_str());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * av[i];
  const double norm = std::sqrt(s);
  const Array* pa = value_ptr(a);
  return a.graph().make(Array::scalar(norm), {a},
                        [pa, norm, eps](const Array& adj, const std::vector<Array*>& p) {
                          const double g = adj[0] / std::max(norm, eps);
                          for (std::size_t i = 0; i < pa->size(); ++i)
                            (*p[0])[i] += g * (*pa)[i];
                        });
}

Node cosine_similarity(Node a, Node b, double eps) {
  const Array &av = a.value(), &bv = b.value();
  check_rank1_pair("cosine_similarity", av, bv);
  if (eps <= 0.0) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      sa += av[i] * av[i];
      sb += bv[i] * bv[i];
    }
    if (sa == 0.0 || sb == 0.0) {
      throw std::domain_error("cosine_similarity: zero-norm operand with guard disabled");
    }
    eps = 0.0;
  }
  return div(dot(a, b), mul(l2_norm(a, eps), l2_norm(b, eps)), eps);
}

Node stack(const std::vector<Node>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("stack: no operands");
  std::vector<double> vals;
  vals.reserve(scalars.size());
  for (const Node& s : scalars) {
    if (s.value().rank() != 0) {
      throw std::invalid_argument("stack: rank-0 operands required, got " +
                                  s.value().shape_str());
    }
    vals.push_back(s.value()[0]);
  }
  return scalars.front().graph().make(Array::vector(std::move(vals)), scalars,
                                      [](const Array& adj, const std::vector<Array*>& p) {
                                        for (std::size_t i = 0; i < p.size(); ++i)
                                          (*p[i])[0] += adj[i];
                                      });
}

Node gather(Node v, std::vector<std::size_t> indices) {
  const Array& vv = v.value();
  if (vv.rank() != 1) {
    throw std::invalid_argument("gather: rank-1 source required, got " + vv.shape_str());
  }
  if (indices.empty()) throw std::invalid_argument("gather: no indices");
  std::vector<double> vals;
  vals.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= vv.size()) {
      throw std::out_of_range("gather: index " + std::to_string(idx) + " out of " +
                              std::to_string(vv.size()));
    }
    vals.push_back(vv[idx]);
  }
  return v.graph().make(Array::vector(std::move(vals)), {v},
                        [idx = std::move(indices)](const Array& adj,
                                                   const std::vector<Array*>& p) {
                          for (std::size_t k = 0; k < idx.size(); ++k)
                            (*p[0])[idx[k]] += adj[k];
                        });
}

}  // namespace correg::ndgrad
