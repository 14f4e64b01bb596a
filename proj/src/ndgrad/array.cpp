#include "correg/ndgrad/array.hpp"

#include <cmath>

namespace correg::ndgrad {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Array::Array(std::vector<std::size_t> shape, std::vector<double> data, bool validate)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) {
    throw std::invalid_argument("Array: rank " + std::to_string(shape_.size()) +
                                " not supported (max 2)");
  }
  if (data_.empty()) throw std::invalid_argument("Array: empty data");
  if (shape_product(shape_) != data_.size()) {
    throw std::invalid_argument("Array: shape " + shape_str() + " does not match " +
                                std::to_string(data_.size()) + " elements");
  }
  if (validate) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw std::invalid_argument("Array: non-finite value at index " + std::to_string(i));
      }
    }
  }
}

Array Array::scalar(double v) { return Array({}, {v}, true); }

Array Array::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Array({n}, std::move(v), true);
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Array({rows, cols}, std::move(v), true);
}

Array Array::zeros(const std::vector<std::size_t>& shape) {
  return Array(shape, std::vector<double>(shape_product(shape), 0.0), false);
}

Array Array::zeros_like(const Array& other) {
  return Array(other.shape_, std::vector<double>(other.size(), 0.0), false);
}

std::size_t Array::rows() const {
  if (rank() != 2) throw std::logic_error("Array::rows on rank-" + std::to_string(rank()));
  return shape_[0];
}

std::size_t Array::cols() const {
  if (rank() != 2) throw std::logic_error("Array::cols on rank-" + std::to_string(rank()));
  return shape_[1];
}

double Array::scalar_value() const {
  if (rank() != 0) throw std::logic_error("Array::scalar_value on shape " + shape_str());
  return data_[0];
}

void Array::fill(double v) {
  for (auto& x : data_) x = v;
}

std::string Array::shape_str() const {
  switch (rank()) {
    case 0:
      return "scalar";
    case 1:
      return "[" + std::to_string(shape_[0]) + "]";
    default:
      return "[" + std::to_string(shape_[0]) + " x " + std::to_string(shape_[1]) + "]";
  }
}

}  // namespace correg::ndgrad
