#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "actsub/activation_bank.hpp"
#include "actsub/bank.hpp"
#include "actsub/shaping.hpp"
#include "actsub/subspace.hpp"

namespace actsub {

struct ScoreConfig {
  // Exponent on the insignificant score in the fused score.
  double lambda = 1.0;
  // Neighbours averaged by the insignificant score.
  std::size_t top_n = 10;
  ShapingConfig shaping;
  bool use_bias_in_logits = false;
  double cos_clamp_eps = 1e-12;
  // Component fed to the cosine score (and stored in the bank).
  Component s_arrow_component = Component::kInsignificant;

  void validate() const;
};

linalg::Vec softmax(std::span<const double> logits);
// max softmax probability
double msp_score(std::span<const double> logits);
// logsumexp(logits): the negative free energy, higher for ID.
double energy_score(std::span<const double> logits);

// -log(1 - m) where m is the mean of the top_n cosine similarities between
// the query and the bank rows, clamped to [-1 + eps, 1 - eps].
double insignificant_score(std::span<const double> a_insig, const ActivationBank& bank_insig,
                           const ScoreConfig& cfg);

// Energy of the logits rebuilt from the shaped decisive component:
// U Sigma V^T (V_dec^T V_dec shape(a_dec)).
double decisive_score(std::span<const double> a, const SubspaceSplit& split,
                      const HeadFactorization& fac, const ScoreConfig& cfg);

// insignificant^lambda * decisive; lambda == 0 returns the decisive score.
double fuse_scores(double insignificant, double decisive, double lambda);

double actsub_score(std::span<const double> a, const SubspaceSplit& split, const HeadFactorization& fac,
                    const ActivationBank& bank_insig, const ScoreConfig& cfg);

// true (OOD) iff score < tau; scores are ID-positive, so the boundary is ID.
bool decide(double score, double tau);

enum class ScoreMethod { kActsub, kEnergy, kMsp, kDecisive, kInsignificant };

const char* to_string(ScoreMethod method);
ScoreMethod parse_score_method(const std::string& text);

struct ScoreReport {
  std::string method;
  linalg::Vec scores;
  ScoreConfig config;
  std::uint64_t seed = 0;
  // Rows whose decisive score was <= 0 (fused products lose their ordering meaning there).
  std::size_t nonpositive_decisive = 0;
};

// A calibrated scorer: head, factorization, split and the projected bank.
class Detector {
 public:
  // Baseline-only detector (energy, msp).
  Detector(WeightHead head, ScoreConfig cfg);
  Detector(WeightHead head, HeadFactorization fac, SubspaceSplit split, ActivationBank bank,
           ScoreConfig cfg);

  double score(ScoreMethod method, std::span<const double> a) const;
  ScoreReport score_batch(ScoreMethod method, const linalg::Mat& rows, std::uint64_t seed = 0) const;

  const WeightHead& head() const { return head_; }
  const ScoreConfig& config() const { return cfg_; }
  ScoreConfig& config() { return cfg_; }
  const HeadFactorization& factorization() const;
  const SubspaceSplit& subspaces() const;
  const ActivationBank& bank() const;

 private:
  WeightHead head_;
  std::optional<HeadFactorization> fac_;
  std::optional<SubspaceSplit> split_;
  std::optional<ActivationBank> bank_;
  ScoreConfig cfg_;
};

}  // namespace actsub
