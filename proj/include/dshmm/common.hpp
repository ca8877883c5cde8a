#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dshmm {

// Dense row-major matrix, growable along both dimensions.
template <typename T>
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), v(r * c, fill) {}

  T& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

  T* row(std::size_t i) { return v.data() + i * cols; }
  const T* row(std::size_t i) const { return v.data() + i * cols; }

  // Resize preserving existing entries; new cells are zero.
  void resize_preserving(std::size_t r, std::size_t c) {
    if (r == rows && c == cols) return;
    Mat<T> out(r, c);
    for (std::size_t i = 0; i < std::min(r, rows); ++i)
      for (std::size_t j = 0; j < std::min(c, cols); ++j) out(i, j) = (*this)(i, j);
    *this = std::move(out);
  }

  T row_sum(std::size_t i) const {
    T s{};
    for (std::size_t j = 0; j < cols; ++j) s += (*this)(i, j);
    return s;
  }
  T col_sum(std::size_t j) const {
    T s{};
    for (std::size_t i = 0; i < rows; ++i) s += (*this)(i, j);
    return s;
  }
  bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && v == o.v; }
};

using IMat = Mat<long long>;
using DMat = Mat<double>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace dshmm
