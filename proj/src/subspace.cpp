#include "actsub/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actsub/error.hpp"
#include "actsub/parallel.hpp"

namespace actsub {

using linalg::Mat;
using linalg::Vec;

void WeightHead::validate(std::size_t min_classes) const {
  if (w.rows() < min_classes) {
    throw InvalidInput("weight head needs at least " + std::to_string(min_classes) + " classes");
  }
  if (w.cols() < 1) throw InvalidInput("weight head needs at least 1 feature");
  if (!linalg::all_finite(w.data())) throw InvalidInput("weight head has non-finite entries");
  if (bias) {
    if (bias->size() != w.rows()) throw InvalidInput("bias length != class count");
    if (!linalg::all_finite(*bias)) throw InvalidInput("bias has non-finite entries");
  }
}

Vec WeightHead::logits(std::span<const double> a, bool with_bias) const {
  Vec l = linalg::matvec(w, a);
  if (with_bias && bias)
    for (std::size_t i = 0; i < l.size(); ++i) l[i] += (*bias)[i];
  return l;
}

Mat HeadFactorization::nullspace_basis() const {
  Mat out(0, features());
  for (std::size_t r = rank; r < svd.vt.rows(); ++r) out.append_row(svd.vt.row(r));
  for (std::size_t r = 0; r < complement.rows(); ++r) out.append_row(complement.row(r));
  return out;
}

Mat HeadFactorization::row_space_basis() const {
  Mat out(0, features());
  for (std::size_t r = 0; r < rank; ++r) out.append_row(svd.vt.row(r));
  return out;
}

Mat HeadFactorization::full_basis() const {
  Mat out = svd.vt;
  for (std::size_t r = 0; r < complement.rows(); ++r) out.append_row(complement.row(r));
  return out;
}

HeadFactorization factorize(const WeightHead& head) {
  head.validate();
  HeadFactorization fac;
  fac.svd = linalg::svd(head.w);
  fac.rank = fac.svd.rank();
  const std::size_t n = head.features();
  const std::size_t r = fac.svd.sigma.size();
  fac.nullspace_dim = (r - fac.rank) + (n - r);
  fac.p = linalg::pinv_apply(fac.svd, Vec(head.classes(), 1.0));
  fac.complement = n > r ? linalg::orthonormal_completion(fac.svd.vt, n) : Mat(0, n);
  fac.bias = head.bias;
  return fac;
}

NormBalance norm_balance(const HeadFactorization& fac, const ActivationBank& train) {
  const std::size_t n = fac.features();
  if (train.dim() != n) {
    throw InvalidInput("norm_balance: bank dim " + std::to_string(train.dim()) + " != head features " +
                       std::to_string(n));
  }
  const std::size_t rank = fac.rank;
  // Fixed-size blocks so the summation order never depends on the thread count.
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (train.size() + kBlock - 1) / kBlock;
  std::vector<Vec> dec_sums(blocks, Vec(rank + 1, 0.0));
  std::vector<Vec> insig_sums(blocks, Vec(rank + 1, 0.0));

  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(train.size(), begin + kBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const auto a = train.row(i);
      const double total = linalg::dot(a, a);
      double prefix = 0.0;
      for (std::size_t k = 0; k <= rank; ++k) {
        if (k > 0) {
          const double c = linalg::dot(fac.svd.vt.row(k - 1), a);
          prefix += c * c;
        }
        dec_sums[b][k] += std::sqrt(prefix);
        insig_sums[b][k] += std::sqrt(std::max(0.0, total - prefix));
      }
    }
  });

  NormBalance out;
  out.mean_dec_norm.assign(rank + 1, 0.0);
  out.mean_insig_norm.assign(rank + 1, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t k = 0; k <= rank; ++k) {
      out.mean_dec_norm[k] += dec_sums[b][k];
      out.mean_insig_norm[k] += insig_sums[b][k];
    }
  const auto count = static_cast<double>(train.size());
  out.signed_gap.resize(rank + 1);
  for (std::size_t k = 0; k <= rank; ++k) {
    out.mean_dec_norm[k] /= count;
    out.mean_insig_norm[k] /= count;
    out.signed_gap[k] = out.mean_insig_norm[k] - out.mean_dec_norm[k];
  }
  return out;
}

std::size_t select_k(const HeadFactorization& fac, const ActivationBank& train) {
  const NormBalance balance = norm_balance(fac, train);
  std::size_t best = 0;
  for (std::size_t k = 1; k < balance.signed_gap.size(); ++k)
    if (std::abs(balance.signed_gap[k]) < std::abs(balance.signed_gap[best])) best = k;
  return best;
}

SubspaceSplit split(const HeadFactorization& fac, std::size_t k) {
  if (k > fac.rank) {
    throw InvalidInput("split: k = " + std::to_string(k) + " exceeds rank " + std::to_string(fac.rank));
  }
  const std::size_t n = fac.features();
  SubspaceSplit s;
  s.k = k;
  s.v_dec = Mat(0, n);
  s.v_insig = Mat(0, n);
  for (std::size_t r = 0; r < k; ++r) s.v_dec.append_row(fac.svd.vt.row(r));
  for (std::size_t r = k; r < fac.svd.vt.rows(); ++r) s.v_insig.append_row(fac.svd.vt.row(r));
  for (std::size_t r = 0; r < fac.complement.rows(); ++r) s.v_insig.append_row(fac.complement.row(r));
  return s;
}

namespace {

Vec project_onto(const Mat& basis, std::size_t n, std::span<const double> a) {
  if (a.size() != n) {
    throw InvalidInput("projection: vector length " + std::to_string(a.size()) + " != " + std::to_string(n));
  }
  if (basis.rows() == 0) return Vec(n, 0.0);
  return linalg::matvec_transposed(basis, linalg::matvec(basis, a));
}

}  // namespace

Vec project_decisive(const SubspaceSplit& s, std::span<const double> a) {
  return project_onto(s.v_dec, s.features(), a);
}

Vec project_insignificant(const SubspaceSplit& s, std::span<const double> a) {
  return project_onto(s.v_insig, s.features(), a);
}

Vec alignment_profile(const HeadFactorization& fac, const Mat& basis) {
  const std::size_t n = fac.features();
  if (basis.cols() != n) throw InvalidInput("alignment_profile: basis width != feature count");
  if (linalg::row_orthonormality_error(basis) > 1e-6) {
    throw InvalidInput("alignment_profile: basis rows are not orthonormal");
  }
  const double p_norm = linalg::norm(fac.p);
  if (p_norm == 0.0) throw InvalidInput("alignment_profile: softmax-invariant direction is zero");
  Vec out(basis.rows());
  for (std::size_t i = 0; i < basis.rows(); ++i) out[i] = std::abs(linalg::dot(basis.row(i), fac.p)) / p_norm;
  return out;
}

const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::kSvd: return "svd";
    case BasisKind::kPca: return "pca";
    case BasisKind::kSiPca: return "si-pca";
    case BasisKind::kNullspace: return "nullspace";
  }
  return "unknown";
}

BasisKind parse_basis_kind(const std::string& text) {
  if (text == "svd") return BasisKind::kSvd;
  if (text == "pca") return BasisKind::kPca;
  if (text == "si-pca") return BasisKind::kSiPca;
  if (text == "nullspace") return BasisKind::kNullspace;
  throw ConfigError("unknown basis '" + text + "' (expected svd|pca|si-pca|nullspace)");
}

namespace {

// Covariance eigenvectors of the rows of `centred` (N x m), descending.
void covariance_eigen(const Mat& centred, Mat& vectors, Vec& values) {
  const std::size_t m = centred.cols();
  Mat cov(m, m);
  for (std::size_t i = 0; i < centred.rows(); ++i) {
    const auto x = centred.row(i);
    for (std::size_t a = 0; a < m; ++a) {
      if (x[a] == 0.0) continue;
      auto crow = cov.row(a);
      for (std::size_t b = a; b < m; ++b) crow[b] += x[a] * x[b];
    }
  }
  const double denom = centred.rows() > 1 ? static_cast<double>(centred.rows() - 1) : 1.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      cov(a, b) /= denom;
      cov(b, a) = cov(a, b);
    }
  // The covariance is symmetric PSD, so its SVD is its eigendecomposition.
  linalg::SvdResult f = linalg::svd(cov);
  vectors = std::move(f.vt);
  values = std::move(f.sigma);
}

}  // namespace

PcaResult pca(const ActivationBank& train, const Vec* remove_direction) {
  const std::size_t n = train.dim();
  Vec mean(n, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto r = train.row(i);
    for (std::size_t d = 0; d < n; ++d) mean[d] += r[d];
  }
  for (double& m : mean) m /= static_cast<double>(train.size());

  Mat centred(train.size(), n);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto r = train.row(i);
    auto c = centred.row(i);
    for (std::size_t d = 0; d < n; ++d) c[d] = r[d] - mean[d];
  }

  PcaResult out;
  if (remove_direction == nullptr) {
    covariance_eigen(centred, out.components, out.variances);
    return out;
  }

  if (remove_direction->size() != n) throw InvalidInput("pca: removed direction has wrong length");
  const double len = linalg::norm(*remove_direction);
  if (len == 0.0) throw InvalidInput("pca: removed direction is zero");
  Vec unit = *remove_direction;
  for (double& x : unit) x /= len;

  // Work in coordinates of the orthogonal complement of `unit`, so every
  // principal direction is exactly orthogonal to it.
  Mat unit_row(1, n, unit);
  const Mat complement = linalg::orthonormal_completion(unit_row, n);
  Mat coords(train.size(), complement.rows());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Vec c = linalg::matvec(complement, centred.row(i));
    std::copy(c.begin(), c.end(), coords.row(i).begin());
  }
  Mat sub_vectors;
  Vec sub_values;
  if (complement.rows() > 0) covariance_eigen(coords, sub_vectors, sub_values);
  out.components = Mat(0, n);
  for (std::size_t j = 0; j < sub_vectors.rows(); ++j)
    out.components.append_row(linalg::matvec_transposed(complement, sub_vectors.row(j)));
  out.components.append_row(unit);
  out.variances = std::move(sub_values);
  out.variances.push_back(0.0);
  return out;
}

std::size_t default_pca_dims(std::size_t n, const Vec& variances) {
  if (n == 2048) return 512;
  double total = 0.0;
  for (double v : variances) total += std::max(0.0, v);
  if (total <= 0.0) return std::min<std::size_t>(1, n);
  double running = 0.0;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    running += std::max(0.0, variances[i]);
    if (running >= 0.95 * total) return i + 1;
  }
  return variances.size();
}

namespace {

SubspaceSplit split_components(const Mat& components, std::size_t d) {
  SubspaceSplit s;
  s.k = d;
  s.v_dec = Mat(0, components.cols());
  s.v_insig = Mat(0, components.cols());
  for (std::size_t r = 0; r < components.rows(); ++r)
    (r < d ? s.v_dec : s.v_insig).append_row(components.row(r));
  return s;
}

}  // namespace

SubspaceSplit build_basis(const BasisStrategy& strategy, const WeightHead& head,
                          const HeadFactorization& fac, const ActivationBank& train) {
  const std::size_t n = head.features();
  if (train.dim() != n) {
    throw InvalidInput("build_basis: bank dim " + std::to_string(train.dim()) + " != head features " +
                       std::to_string(n));
  }
  if (strategy.pca_dims && *strategy.pca_dims > n) {
    throw InvalidInput("build_basis: PCA dims " + std::to_string(*strategy.pca_dims) + " > n = " +
                       std::to_string(n));
  }
  switch (strategy.kind) {
    case BasisKind::kSvd: {
      const std::size_t k = strategy.k ? *strategy.k : select_k(fac, train);
      return split(fac, k);
    }
    case BasisKind::kPca:
    case BasisKind::kSiPca: {
      const PcaResult result = strategy.kind == BasisKind::kPca ? pca(train) : pca(train, &fac.p);
      const std::size_t d = strategy.pca_dims ? *strategy.pca_dims : default_pca_dims(n, result.variances);
      return split_components(result.components, d);
    }
    case BasisKind::kNullspace: {
      if (fac.nullspace_dim == 0) throw DegenerateBasis("weight matrix has a trivial nullspace");
      SubspaceSplit s;
      s.k = fac.rank;
      s.v_dec = fac.row_space_basis();
      s.v_insig = fac.nullspace_basis();
      return s;
    }
  }
  throw InvalidInput("build_basis: unknown strategy");
}

SubspaceSplit build_basis(const BasisStrategy& strategy, const WeightHead& head,
                          const ActivationBank& train) {
  return build_basis(strategy, head, factorize(head), train);
}

}  // namespace actsub
