#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace imcgae {

/// Dense row-major matrix of doubles. Vectors are stored as n x 1.
struct NumArray {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  NumArray() = default;
  NumArray(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("NumArray: negative shape");
  }
  NumArray(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    if (r < 0 || c < 0 || data.size() != static_cast<std::size_t>(r) * c)
      throw std::invalid_argument("NumArray: shape does not match data length");
  }

  static NumArray zeros(int r, int c) { return NumArray(r, c); }
  static NumArray zeros_like(const NumArray& other) { return NumArray(other.rows, other.cols); }
  static NumArray scalar(double v) {
    NumArray a(1, 1);
    a.data[0] = v;
    return a;
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const NumArray& other) const { return rows == other.rows && cols == other.cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }

  bool all_finite() const;
  double abs_max() const;
};

// y[0..n) += a * x[0..n)
inline void axpy(double* y, double a, const double* x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace imcgae
