#include "actsub/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "actsub/error.hpp"
#include "actsub/parallel.hpp"

namespace actsub {

using linalg::Mat;
using linalg::Vec;

void ScoreConfig::validate() const {
  if (top_n < 1) throw InvalidInput("top_n must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be finite and >= 0");
  if (!(cos_clamp_eps > 0.0 && cos_clamp_eps < 1.0)) throw InvalidInput("cos_clamp_eps must lie in (0, 1)");
  shaping.validate();
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInput("softmax: empty logits");
  if (!linalg::all_finite(logits)) throw InvalidInput("softmax: non-finite logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double msp_score(std::span<const double> logits) {
  const Vec probs = softmax(logits);
  return *std::max_element(probs.begin(), probs.end());
}

double energy_score(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInput("energy: empty logits");
  if (!linalg::all_finite(logits)) throw InvalidInput("energy: non-finite logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - peak);
  return peak + std::log(total);
}

double insignificant_score(std::span<const double> a_insig, const ActivationBank& bank_insig,
                           const ScoreConfig& cfg) {
  if (bank_insig.size() < cfg.top_n) {
    throw InvalidInput("insignificant_score: bank has " + std::to_string(bank_insig.size()) +
                       " rows, fewer than top_n = " + std::to_string(cfg.top_n));
  }
  const Vec sims = top_n_cosine(bank_insig, a_insig, cfg.top_n);
  double m = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
  m = std::clamp(m, -1.0 + cfg.cos_clamp_eps, 1.0 - cfg.cos_clamp_eps);
  return -std::log1p(-m);
}

double decisive_score(std::span<const double> a, const SubspaceSplit& split, const HeadFactorization& fac,
                      const ScoreConfig& cfg) {
  if (split.features() != fac.features()) throw InvalidInput("decisive_score: split/head dimension mismatch");
  const Vec a_dec = project_decisive(split, a);
  const Vec shaped = shape(cfg.shaping, a_dec);
  // Fold the shaped vector back onto the decisive span, then apply W = U S V^T.
  Vec back(fac.features(), 0.0);
  if (split.v_dec.rows() > 0) back = linalg::matvec_transposed(split.v_dec, linalg::matvec(split.v_dec, shaped));
  Vec coeff = linalg::matvec(fac.svd.vt, back);
  for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] *= fac.svd.sigma[j];
  Vec logits = linalg::matvec(fac.svd.u, coeff);
  if (cfg.use_bias_in_logits && fac.bias)
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += (*fac.bias)[i];
  return energy_score(logits);
}

double fuse_scores(double insignificant, double decisive, double lambda) {
  if (lambda == 0.0) return decisive;
  return std::pow(insignificant, lambda) * decisive;
}

double actsub_score(std::span<const double> a, const SubspaceSplit& split, const HeadFactorization& fac,
                    const ActivationBank& bank_insig, const ScoreConfig& cfg) {
  const double dec = decisive_score(a, split, fac, cfg);
  if (cfg.lambda == 0.0) return dec;
  const Vec query = project_component(split, cfg.s_arrow_component, a);
  return fuse_scores(insignificant_score(query, bank_insig, cfg), dec, cfg.lambda);
}

bool decide(double score, double tau) { return score < tau; }

const char* to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::kActsub: return "actsub";
    case ScoreMethod::kEnergy: return "energy";
    case ScoreMethod::kMsp: return "msp";
    case ScoreMethod::kDecisive: return "decisive";
    case ScoreMethod::kInsignificant: return "insignificant";
  }
  return "unknown";
}

ScoreMethod parse_score_method(const std::string& text) {
  if (text == "actsub") return ScoreMethod::kActsub;
  if (text == "energy") return ScoreMethod::kEnergy;
  if (text == "msp") return ScoreMethod::kMsp;
  if (text == "decisive") return ScoreMethod::kDecisive;
  if (text == "insignificant") return ScoreMethod::kInsignificant;
  throw ConfigError("unknown score method '" + text + "' (expected actsub|energy|msp|decisive|insignificant)");
}

Detector::Detector(WeightHead head, ScoreConfig cfg) : head_(std::move(head)), cfg_(std::move(cfg)) {
  head_.validate(1);
  cfg_.validate();
}

Detector::Detector(WeightHead head, HeadFactorization fac, SubspaceSplit split, ActivationBank bank,
                   ScoreConfig cfg)
    : head_(std::move(head)),
      fac_(std::move(fac)),
      split_(std::move(split)),
      bank_(std::move(bank)),
      cfg_(std::move(cfg)) {
  head_.validate();
  cfg_.validate();
  if (split_->features() != head_.features() || bank_->dim() != head_.features()) {
    throw InvalidInput("detector: head has " + std::to_string(head_.features()) + " features, split " +
                       std::to_string(split_->features()) + ", bank " + std::to_string(bank_->dim()));
  }
}

const HeadFactorization& Detector::factorization() const {
  if (!fac_) throw ConfigError("detector has no subspace decomposition (baseline-only)");
  return *fac_;
}

const SubspaceSplit& Detector::subspaces() const {
  if (!split_) throw ConfigError("detector has no subspace decomposition (baseline-only)");
  return *split_;
}

const ActivationBank& Detector::bank() const {
  if (!bank_) throw ConfigError("detector has no activation bank (baseline-only)");
  return *bank_;
}

double Detector::score(ScoreMethod method, std::span<const double> a) const {
  if (a.size() != head_.features()) {
    throw InvalidInput("score: activation has " + std::to_string(a.size()) + " features, head expects " +
                       std::to_string(head_.features()));
  }
  switch (method) {
    case ScoreMethod::kEnergy: return energy_score(head_.logits(a, cfg_.use_bias_in_logits));
    case ScoreMethod::kMsp: return msp_score(head_.logits(a, cfg_.use_bias_in_logits));
    case ScoreMethod::kDecisive: return decisive_score(a, subspaces(), factorization(), cfg_);
    case ScoreMethod::kInsignificant:
      return insignificant_score(project_component(subspaces(), cfg_.s_arrow_component, a), bank(), cfg_);
    case ScoreMethod::kActsub: return actsub_score(a, subspaces(), factorization(), bank(), cfg_);
  }
  throw InvalidInput("score: unknown method");
}

ScoreReport Detector::score_batch(ScoreMethod method, const Mat& rows, std::uint64_t seed) const {
  if (rows.cols() != head_.features()) {
    throw InvalidInput("score: input has " + std::to_string(rows.cols()) + " features, head expects " +
                       std::to_string(head_.features()));
  }
  ScoreReport report;
  report.method = to_string(method);
  report.config = cfg_;
  report.seed = seed;
  report.scores.assign(rows.rows(), 0.0);
  std::vector<char> nonpositive(rows.rows(), 0);
  parallel_for(rows.rows(), [&](std::size_t i) {
    if (method == ScoreMethod::kActsub) {
      const double dec = decisive_score(rows.row(i), subspaces(), factorization(), cfg_);
      nonpositive[i] = dec <= 0.0;
      if (cfg_.lambda == 0.0) {
        report.scores[i] = dec;
      } else {
        const Vec query = project_component(subspaces(), cfg_.s_arrow_component, rows.row(i));
        report.scores[i] = fuse_scores(insignificant_score(query, bank(), cfg_), dec, cfg_.lambda);
      }
    } else {
      report.scores[i] = score(method, rows.row(i));
    }
  });
  report.nonpositive_decisive = static_cast<std::size_t>(std::count(nonpositive.begin(), nonpositive.end(), 1));
  if (!linalg::all_finite(report.scores)) throw NumericalFailure("score: non-finite score produced");
  return report;
}

}  // namespace actsub
