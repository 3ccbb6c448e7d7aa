#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "actsub/activation_bank.hpp"
#include "actsub/linalg.hpp"

namespace actsub {

// Linear classifier head: logits = w * a (+ bias), w is classes x features.
struct WeightHead {
  linalg::Mat w;
  std::optional<linalg::Vec> bias;

  std::size_t classes() const { return w.rows(); }
  std::size_t features() const { return w.cols(); }
  // Throws InvalidInput unless c >= min_classes, n >= 1, entries finite and
  // the bias has length c. Baseline scores accept single-class heads.
  void validate(std::size_t min_classes = 2) const;
  linalg::Vec logits(std::span<const double> a, bool with_bias) const;
};

struct HeadFactorization {
  linalg::SvdResult svd;
  // Softmax-invariant direction pinv(W) * 1.
  linalg::Vec p;
  std::size_t rank = 0;
  // Zero singular values plus n - min(c, n).
  std::size_t nullspace_dim = 0;
  // (n - min(c, n)) x n orthonormal rows completing vt to a basis of R^n.
  linalg::Mat complement;
  std::optional<linalg::Vec> bias;

  std::size_t features() const { return svd.vt.cols(); }
  // nullspace_dim x n: vt rows with zero singular value, then the complement.
  linalg::Mat nullspace_basis() const;
  // rank x n: right singular vectors with non-zero singular value.
  linalg::Mat row_space_basis() const;
  // n x n: all rows of vt in singular-value order, then the complement.
  linalg::Mat full_basis() const;
};

HeadFactorization factorize(const WeightHead& head);

// Decisive/insignificant bases. Rows of v_dec and v_insig are jointly an
// orthonormal basis of R^n.
struct SubspaceSplit {
  std::size_t k = 0;
  linalg::Mat v_dec;    // k x n
  linalg::Mat v_insig;  // (n - k) x n

  std::size_t features() const { return v_dec.cols(); }
};

// Signed norm balance for every k in [0, rank]: entry k holds the mean over
// the bank of ||a_insig|| - ||a_dec|| with the first k singular directions
// taken as decisive.
struct NormBalance {
  linalg::Vec mean_dec_norm;
  linalg::Vec mean_insig_norm;
  linalg::Vec signed_gap;  // mean_insig_norm - mean_dec_norm
};

NormBalance norm_balance(const HeadFactorization& fac, const ActivationBank& train);

// argmin_k |mean(||a_insig|| - ||a_dec||)| over k in [0, rank], ties to the
// smaller k.
std::size_t select_k(const HeadFactorization& fac, const ActivationBank& train);

SubspaceSplit split(const HeadFactorization& fac, std::size_t k);

linalg::Vec project_decisive(const SubspaceSplit& s, std::span<const double> a);
linalg::Vec project_insignificant(const SubspaceSplit& s, std::span<const double> a);

// |basis_i . p / ||p|||. Rows of `basis` must be orthonormal within 1e-6.
linalg::Vec alignment_profile(const HeadFactorization& fac, const linalg::Mat& basis);

enum class BasisKind { kSvd, kPca, kSiPca, kNullspace };

const char* to_string(BasisKind kind);
BasisKind parse_basis_kind(const std::string& text);

struct BasisStrategy {
  BasisKind kind = BasisKind::kSvd;
  // PCA/SI-PCA decisive direction count; defaults as in default_pca_dims.
  std::optional<std::size_t> pca_dims;
  // SVD only: fixed k instead of select_k.
  std::optional<std::size_t> k;
};

// Principal directions of the centred activations, descending variance.
// With `remove_direction`, the direction is projected out of every centred
// activation first and is appended as the final (zero-variance) direction.
struct PcaResult {
  linalg::Mat components;  // n x n
  linalg::Vec variances;   // length n
};

PcaResult pca(const ActivationBank& train, const linalg::Vec* remove_direction = nullptr);

// 512 when n == 2048, otherwise the smallest count covering 95% of variance.
std::size_t default_pca_dims(std::size_t n, const linalg::Vec& variances);

SubspaceSplit build_basis(const BasisStrategy& strategy, const WeightHead& head,
                          const HeadFactorization& fac, const ActivationBank& train);
SubspaceSplit build_basis(const BasisStrategy& strategy, const WeightHead& head,
                          const ActivationBank& train);

}  // namespace actsub
