#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace correg::ndgrad {

// Thrown by operations whose operands do not conform; carries both shapes.
class ShapeMismatch : public std::invalid_argument {
 public:
  ShapeMismatch(const std::string& op, std::string lhs, std::string rhs)
      : std::invalid_argument(op + ": incompatible shapes " + lhs + " and " + rhs),
        lhs_(std::move(lhs)),
        rhs_(std::move(rhs)) {}

  const std::string& lhs() const { return lhs_; }
  const std::string& rhs() const { return rhs_; }

 private:
  std::string lhs_, rhs_;
};

// Dense row-major array of doubles with rank 0 (scalar), 1 (vector) or
// 2 (matrix). Values must be finite on construction; non-finite input is
// rejected so numerical blow-ups surface where they happen.
class Array {
 public:
  Array() : shape_(), data_(1, 0.0) {}  // rank-0 zero

  static Array scalar(double v);
  static Array vector(std::vector<double> v);
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
  static Array zeros(const std::vector<std::size_t>& shape);
  static Array zeros_like(const Array& other);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  // Value of a rank-0 array.
  double scalar_value() const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Array& o) const { return shape_ == o.shape_; }
  void fill(double v);

  std::string shape_str() const;

 private:
  Array(std::vector<std::size_t> shape, std::vector<double> data, bool validate);

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace correg::ndgrad
