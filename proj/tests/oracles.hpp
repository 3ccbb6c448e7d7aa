#pragma once

// Brute-force reference implementations used as test oracles. None of these
// call into the library's own algorithms beyond Mat storage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "actsub/linalg.hpp"

namespace oracle {

using actsub::linalg::Mat;
using actsub::linalg::Vec;

inline Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(r, c);
  for (double& x : m.data()) x = g(rng);
  return m;
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (double& x : v) x = g(rng);
  return v;
}

inline std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec row_of(const Mat& m, std::size_t i) {
  Vec v(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) v[j] = m(i, j);
  return v;
}

inline Vec mul(const Mat& m, const Vec& x) {
  Vec y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) y[i] += m(i, j) * x[j];
  return y;
}

inline Mat mul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline Mat transposed(const Mat& m) {
  Mat t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Gaussian elimination with partial pivoting; a is square.
inline Vec solve(Mat a, Vec b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) < 1e-300) throw std::runtime_error("oracle::solve: singular system");
    for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// Orthogonal projection of x onto the row span of `span_rows` (linearly
// independent, not necessarily orthonormal) via the normal equations.
inline Vec project_onto_rows(const Mat& span_rows, const Vec& x) {
  const std::size_t k = span_rows.rows();
  Vec out(x.size(), 0.0);
  if (k == 0) return out;
  Mat gram(k, k);
  Vec rhs(k);
  for (std::size_t i = 0; i < k; ++i) {
    rhs[i] = dot(row_of(span_rows, i), x);
    for (std::size_t j = 0; j < k; ++j) gram(i, j) = dot(row_of(span_rows, i), row_of(span_rows, j));
  }
  const Vec coef = solve(gram, rhs);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < x.size(); ++j) out[j] += coef[i] * span_rows(i, j);
  return out;
}

// Mann-Whitney over all pairs.
inline double auroc(const Vec& id, const Vec& ood) {
  double wins = 0.0;
  for (double a : id)
    for (double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Scans every observed ID score as a threshold and keeps the largest one
// that still accepts the target fraction of ID scores.
inline double fpr_at_tpr(const Vec& id, const Vec& ood, double target) {
  double best_tau = -INFINITY;
  bool found = false;
  for (double tau : id) {
    std::size_t accepted = 0;
    for (double s : id) accepted += s >= tau;
    // accepted / n >= target, evaluated without rounding the product
    if (static_cast<double>(accepted) >= target * static_cast<double>(id.size()) - 1e-9) {
      if (!found || tau > best_tau) best_tau = tau;
      found = true;
    }
  }
  std::size_t fp = 0;
  for (double s : ood) fp += s >= best_tau;
  return static_cast<double>(fp) / static_cast<double>(ood.size());
}

// Smallest rank r (1-based) with r / n >= p on the ascending sort.
inline double percentile(Vec v, double p) {
  std::sort(v.begin(), v.end());
  for (std::size_t r = 1; r <= v.size(); ++r)
    if (static_cast<double>(r) >= p * static_cast<double>(v.size()) - 1e-9) return v[r - 1];
  return v.back();
}

inline double logsumexp_naive(const Vec& l) {
  double s = 0.0;
  for (double x : l) s += std::exp(x);
  return std::log(s);
}

}  // namespace oracle
