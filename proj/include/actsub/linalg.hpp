#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace actsub::linalg {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat diagonal(std::span<const double> values);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  // Appends a row; cols must match (or the matrix must be empty with cols 0).
  void append_row(std::span<const double> values);

  bool operator==(const Mat& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// sigma_i is treated as zero iff sigma_i <= kZeroSingularTolerance * sigma_max.
inline constexpr double kZeroSingularTolerance = 1e-6;

struct SvdResult {
  Mat u;        // rows x r, orthonormal columns
  Vec sigma;    // length r = min(rows, cols), non-increasing
  Mat vt;       // r x cols, orthonormal rows

  // Number of singular values above the zero tolerance.
  std::size_t rank() const;
  // Zero threshold kZeroSingularTolerance * sigma_max.
  double zero_threshold() const;
};

// One-sided Jacobi SVD. Right singular vectors are sign-normalised so that
// the largest-magnitude entry (lowest index on ties) is positive.
// Throws InvalidInput for empty or non-finite input and NumericalFailure when
// 100 * min(rows, cols) sweeps do not converge.
SvdResult svd(const Mat& m);

// V * pinv(Sigma) * U^T * y, with singular values under the zero tolerance
// inverted to zero.
Vec pinv_apply(const SvdResult& f, std::span<const double> y);

// Nearest-rank percentile: element ceil(p * n) - 1 of the ascending sort,
// clamped to [0, n - 1].
double percentile(std::span<const double> values, double p);

// Lloyd's algorithm with k-means++ seeding. Returns k x cols centroids.
Mat kmeans(const Mat& points, std::size_t k, std::uint64_t seed, std::size_t max_iter);

// Rows spanning the orthogonal complement of the (orthonormal) rows of
// `basis` in R^n, obtained by Gram-Schmidt on standard basis candidates.
Mat orthonormal_completion(const Mat& basis, std::size_t n);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// m * x
Vec matvec(const Mat& m, std::span<const double> x);
// m^T * x
Vec matvec_transposed(const Mat& m, std::span<const double> x);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
double frobenius_norm(const Mat& m);
// max_{i,j} |(m m^T - I)_{ij}|
double row_orthonormality_error(const Mat& m);
bool all_finite(std::span<const double> values);

}  // namespace actsub::linalg
