// Small dense containers for the low-dimensional state-space tensors used
// throughout the library. State dimension d is tiny (<= 10 in practice) while
// the parameter dimension n can reach 1e5+, so everything is flat row-major
// std::vector<double> with no expression machinery.
#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace jumpgrad {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
  void set_zero() { data.assign(data.size(), 0.0); }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

struct Tens3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> data;

  Tens3() = default;
  Tens3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : d0(a), d1(b), d2(c), data(a * b * c, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * d1 + j) * d2 + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * d1 + j) * d2 + k];
  }

  void resize(std::size_t a, std::size_t b, std::size_t c) {
    d0 = a;
    d1 = b;
    d2 = c;
    data.assign(a * b * c, 0.0);
  }
  void set_zero() { data.assign(data.size(), 0.0); }
};

// Rank-4 tensor, used only for second space derivatives of the volatility
// (index order [i][k][l][m] = d_m d_l sigma_{i,k}).
struct Tens4 {
  std::size_t d0 = 0, d1 = 0, d2 = 0, d3 = 0;
  std::vector<double> data;

  Tens4() = default;
  Tens4(std::size_t a, std::size_t b, std::size_t c, std::size_t e, double fill = 0.0)
      : d0(a), d1(b), d2(c), d3(e), data(a * b * c * e, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data[((i * d1 + j) * d2 + k) * d3 + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * d1 + j) * d2 + k) * d3 + l];
  }

  void resize(std::size_t a, std::size_t b, std::size_t c, std::size_t e) {
    d0 = a;
    d1 = b;
    d2 = c;
    d3 = e;
    data.assign(a * b * c * e, 0.0);
  }
  void set_zero() { data.assign(data.size(), 0.0); }
};

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const std::vector<double>& v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

inline double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// y = M x
inline void matvec(const Mat& m, const Vec& x, Vec& y) {
  assert(m.cols == x.size());
  y.assign(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
}

// C = A B
inline Mat matmul(const Mat& a, const Mat& b) {
  assert(a.cols == b.rows);
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// Dense matrix exponential by scaling-and-squaring on a Taylor series. Only
// used as a test oracle on tiny matrices.
inline Mat expm(const Mat& a, int taylor_order = 24) {
  assert(a.rows == a.cols);
  double norm = 0.0;
  for (double v : a.data) norm = std::max(norm, std::abs(v));
  int squarings = 0;
  Mat scaled = a;
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (double& v : scaled.data) v *= scale;

  Mat result = Mat::identity(a.rows);
  Mat term = Mat::identity(a.rows);
  for (int k = 1; k <= taylor_order; ++k) {
    term = matmul(term, scaled);
    const double coef = 1.0 / k;
    for (double& v : term.data) v *= coef;
    for (std::size_t i = 0; i < result.data.size(); ++i) result.data[i] += term.data[i];
  }
  for (int s = 0; s < squarings; ++s) result = matmul(result, result);
  return result;
}

}  // namespace jumpgrad
