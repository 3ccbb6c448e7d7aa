#include "actsub/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "actsub/error.hpp"

namespace actsub::linalg {

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidInput("matrix data length " + std::to_string(data_.size()) + " != " +
                       std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diagonal(std::span<const double> values) {
  Mat m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw InvalidInput("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Mat(rows.size(), cols, std::move(data));
}

void Mat::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw InvalidInput("append_row: column mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Vec matvec(const Mat& m, std::span<const double> x) {
  if (x.size() != m.cols()) {
    throw InvalidInput("matvec: vector length " + std::to_string(x.size()) + " != cols " +
                       std::to_string(m.cols()));
  }
  Vec out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x);
  return out;
}

Vec matvec_transposed(const Mat& m, std::span<const double> x) {
  if (x.size() != m.rows()) {
    throw InvalidInput("matvec_transposed: vector length " + std::to_string(x.size()) +
                       " != rows " + std::to_string(m.rows()));
  }
  Vec out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double xr = x[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += xr * row[c];
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimension mismatch");
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

double frobenius_norm(const Mat& m) { return norm(m.data()); }

double row_orthonormality_error(const Mat& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i; j < m.rows(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(dot(m.row(i), m.row(j)) - target));
    }
  }
  return worst;
}

namespace {

void subtract_projection(std::span<double> v, std::span<const double> onto) {
  const double c = dot(v, onto);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * onto[i];
}

// Orthonormalises `vectors` in place (modified Gram-Schmidt, two passes).
// Vectors whose residual collapses are replaced by completion directions.
void reorthonormalize(std::vector<Vec>& vectors) {
  const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();
  std::vector<Vec> done;
  done.reserve(vectors.size());
  std::vector<std::size_t> replace;
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    Vec v = vectors[j];
    const double before = norm(v);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& d : done) subtract_projection(v, d);
    const double after = norm(v);
    if (before == 0.0 || after <= 0.5 * before) {
      replace.push_back(j);
      done.push_back(Vec(dim, 0.0));
      continue;
    }
    for (double& x : v) x /= after;
    done.push_back(std::move(v));
  }
  if (!replace.empty()) {
    Mat basis(0, dim);
    for (std::size_t j = 0; j < done.size(); ++j)
      if (std::find(replace.begin(), replace.end(), j) == replace.end()) basis.append_row(done[j]);
    const Mat extra = orthonormal_completion(basis, dim);
    for (std::size_t i = 0; i < replace.size(); ++i) {
      const auto row = extra.row(i);
      done[replace[i]].assign(row.begin(), row.end());
    }
  }
  vectors = std::move(done);
}

}  // namespace

Mat orthonormal_completion(const Mat& basis, std::size_t n) {
  if (basis.rows() > 0 && basis.cols() != n) throw InvalidInput("completion: basis width != n");
  if (basis.rows() > n) throw InvalidInput("completion: more basis rows than dimensions");
  const std::size_t missing = n - basis.rows();
  std::vector<Vec> rows;
  rows.reserve(basis.rows() + missing);
  for (std::size_t r = 0; r < basis.rows(); ++r) rows.emplace_back(basis.row(r).begin(), basis.row(r).end());

  // Residual norm^2 of e_i against the current span is 1 - sum_j rows[j][i]^2.
  Vec captured(n, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < n; ++i) captured[i] += r[i] * r[i];

  Mat out(0, n);
  for (std::size_t added = 0; added < missing; ++added) {
    std::size_t best = 0;
    double best_residual = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double residual = 1.0 - captured[i];
      if (residual > best_residual) {
        best_residual = residual;
        best = i;
      }
    }
    Vec v(n, 0.0);
    v[best] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& r : rows) subtract_projection(v, r);
    const double len = norm(v);
    if (len <= 1e-8) throw NumericalFailure("completion: basis rows are not orthonormal");
    for (double& x : v) x /= len;
    for (std::size_t i = 0; i < n; ++i) captured[i] += v[i] * v[i];
    out.append_row(v);
    rows.push_back(std::move(v));
  }
  if (out.rows() == 0) out = Mat(0, n);
  return out;
}

std::size_t SvdResult::rank() const {
  const double threshold = zero_threshold();
  return static_cast<std::size_t>(
      std::count_if(sigma.begin(), sigma.end(), [&](double s) { return s > threshold; }));
}

double SvdResult::zero_threshold() const {
  return sigma.empty() ? 0.0 : kZeroSingularTolerance * sigma.front();
}

SvdResult svd(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("svd: empty matrix");
  if (!all_finite(m.data())) throw InvalidInput("svd: non-finite entry");

  // Work on a tall matrix A (height >= width) held as columns. For a wide
  // input the columns of A = m^T are the rows of m.
  const bool wide = m.rows() < m.cols();
  const std::size_t height = wide ? m.cols() : m.rows();
  const std::size_t width = wide ? m.rows() : m.cols();

  std::vector<Vec> cols(width, Vec(height));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (wide) cols[r][c] = m(r, c);
      else cols[c][r] = m(r, c);
    }
  std::vector<Vec> rot(width, Vec(width, 0.0));
  for (std::size_t j = 0; j < width; ++j) rot[j][j] = 1.0;

  const double tol = static_cast<double>(height) * std::numeric_limits<double>::epsilon();
  const std::size_t max_sweeps = 100 * width;
  bool converged = false;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < width; ++p) {
      for (std::size_t q = p + 1; q < width; ++q) {
        Vec& ap = cols[p];
        Vec& aq = cols[q];
        const double alpha = dot(ap, ap);
        const double beta = dot(aq, aq);
        const double gamma = dot(ap, aq);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < height; ++i) {
          const double x = ap[i];
          const double y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        Vec& vp = rot[p];
        Vec& vq = rot[q];
        for (std::size_t i = 0; i < width; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
  }
  if (!converged) {
    throw NumericalFailure("svd: one-sided Jacobi did not converge in " +
                           std::to_string(max_sweeps) + " sweeps");
  }

  Vec sigma(width);
  for (std::size_t j = 0; j < width; ++j) sigma[j] = norm(cols[j]);
  std::vector<std::size_t> order(width);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  // Left vectors of A (length `height`) and right vectors of A (length `width`).
  std::vector<Vec> left(width);
  std::vector<Vec> right(width);
  Vec sorted_sigma(width);
  for (std::size_t j = 0; j < width; ++j) {
    const std::size_t src = order[j];
    sorted_sigma[j] = sigma[src];
    left[j] = cols[src];
    if (sigma[src] > 0.0)
      for (double& x : left[j]) x /= sigma[src];
    right[j] = rot[src];
  }
  reorthonormalize(left);

  // For a wide input m = A^T = right * Sigma * left^T, so the roles swap.
  std::vector<Vec>& u_cols = wide ? right : left;
  std::vector<Vec>& v_rows = wide ? left : right;
  const std::size_t u_height = m.rows();

  for (std::size_t j = 0; j < width; ++j) {
    Vec& v = v_rows[j];
    std::size_t lead = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs(v[i]) > std::abs(v[lead])) lead = i;
    if (v[lead] < 0.0) {
      for (double& x : v) x = -x;
      for (double& x : u_cols[j]) x = -x;
    }
  }

  SvdResult out;
  out.sigma = std::move(sorted_sigma);
  out.u = Mat(u_height, width);
  for (std::size_t j = 0; j < width; ++j)
    for (std::size_t i = 0; i < u_height; ++i) out.u(i, j) = u_cols[j][i];
  out.vt = Mat(width, m.cols());
  for (std::size_t j = 0; j < width; ++j)
    for (std::size_t i = 0; i < m.cols(); ++i) out.vt(j, i) = v_rows[j][i];
  return out;
}

Vec pinv_apply(const SvdResult& f, std::span<const double> y) {
  if (y.size() != f.u.rows()) {
    throw InvalidInput("pinv_apply: vector length " + std::to_string(y.size()) + " != " +
                       std::to_string(f.u.rows()));
  }
  const double threshold = f.zero_threshold();
  Vec coeff = matvec_transposed(f.u, y);
  for (std::size_t j = 0; j < coeff.size(); ++j)
    coeff[j] = f.sigma[j] > threshold ? coeff[j] / f.sigma[j] : 0.0;
  return matvec_transposed(f.vt, coeff);
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw InvalidInput("percentile: empty vector");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("percentile: fraction outside [0, 1]");
  const auto n = static_cast<double>(values.size());
  // The small guard keeps decimal fractions such as 0.95 * 20 on the exact rank.
  const double rank = std::ceil(p * n - 1e-9) - 1.0;
  const auto index = static_cast<std::size_t>(std::clamp(rank, 0.0, n - 1.0));
  Vec copy(values.begin(), values.end());
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(index), copy.end());
  return copy[index];
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Mat kmeans(const Mat& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  if (k == 0) throw InvalidInput("kmeans: k must be positive");
  if (k > n) {
    throw InvalidInput("kmeans: k = " + std::to_string(k) + " exceeds point count " + std::to_string(n));
  }
  if (!all_finite(points.data())) throw InvalidInput("kmeans: non-finite point");

  std::mt19937_64 rng(seed);
  Mat centroids(0, dim);

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centroids.append_row(points.row(pick(rng)));
  Vec closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(points.row(i), centroids.row(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centroids.rows() < k) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (closest[i] <= 0.0) continue;
        running += closest[i];
        chosen = i;
        if (running > target) break;
      }
    } else {
      // All remaining points coincide with a centroid; take the next index.
      chosen = centroids.rows() % n;
    }
    centroids.append_row(points.row(chosen));
    for (std::size_t i = 0; i < n; ++i)
      closest[i] = std::min(closest[i], squared_distance(points.row(i), centroids.row(centroids.rows() - 1)));
  }

  std::vector<std::size_t> assignment(n, k);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    Vec dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(points.row(i), centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(points.row(i), centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist[i] = best_d;
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Mat sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(assignment[i]);
      const auto p = points.row(i);
      for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto dst = centroids.row(c);
      if (counts[c] == 0) {
        // Re-seed with the point farthest from its own centroid.
        const auto far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        const auto p = points.row(far);
        std::copy(p.begin(), p.end(), dst.begin());
        dist[far] = 0.0;
        continue;
      }
      const auto s = sums.row(c);
      for (std::size_t d = 0; d < dim; ++d) dst[d] = s[d] / static_cast<double>(counts[c]);
    }
  }
  return centroids;
}

}  // namespace actsub::linalg
