#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "varidyn/dual.hpp"
#include "varidyn/errors.hpp"

namespace varidyn {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;

/// Dense row-major matrix over an arbitrary scalar (double or a Dual level).
template <typename T>
class MatT {
 public:
  MatT() = default;
  MatT(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Mat = MatT<double>;

/// Axis-aligned box, used as the sampling domain of a Lagrangian's
/// configuration space.
struct Box {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return lo.size(); }

  void validate() const {
    if (lo.size() != hi.size())
      throw DimensionError("box bounds have mismatched dimensions");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i]))
        throw PreconditionError("box has empty extent in some coordinate");
  }
};

/// Remove coordinate `index` from a vector (used when a cyclic coordinate is
/// eliminated).
template <typename T>
std::vector<T> drop_coordinate(std::span<const T> x, std::size_t index) {
  if (index >= x.size()) throw DimensionError("coordinate index out of range");
  std::vector<T> out;
  out.reserve(x.size() - 1);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (i != index) out.push_back(x[i]);
  return out;
}

/// Insert `value` so that it lands at position `index` (inverse of
/// drop_coordinate).
template <typename T>
std::vector<T> prepend_coordinate(std::span<const T> x, std::size_t index,
                                  const T& value) {
  if (index > x.size()) throw DimensionError("coordinate index out of range");
  std::vector<T> out;
  out.reserve(x.size() + 1);
  for (std::size_t i = 0; i < index; ++i) out.push_back(x[i]);
  out.push_back(value);
  for (std::size_t i = index; i < x.size(); ++i) out.push_back(x[i]);
  return out;
}

inline Box drop_box_coordinate(const Box& b, std::size_t index) {
  return Box{drop_coordinate<double>(b.lo, index),
             drop_coordinate<double>(b.hi, index)};
}

inline Box prepend_box_coordinate(const Box& b, std::size_t index, double lo,
                                  double hi) {
  return Box{prepend_coordinate<double>(b.lo, index, lo),
             prepend_coordinate<double>(b.hi, index, hi)};
}

}  // namespace varidyn
