#include "pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "actsub/bank.hpp"
#include "actsub/error.hpp"

namespace actsub::cli {

Calibration prepare(WeightHead head, const ActivationBank& train, const store::RunConfig& cfg) {
  head.validate();
  if (train.dim() != head.features()) {
    throw InvalidInput("training bank has " + std::to_string(train.dim()) + " features, head expects " +
                       std::to_string(head.features()));
  }
  HeadFactorization fac = factorize(head);
  ActivationBank subset = subsample(train, cfg.sample_fraction, cfg.seed);
  return Calibration{std::move(head), std::move(fac), std::move(subset)};
}

BasisStrategy basis_strategy(const store::RunConfig& cfg) {
  BasisStrategy s;
  s.kind = cfg.basis;
  s.pca_dims = cfg.pca_d;
  if (cfg.basis == BasisKind::kSvd) s.k = cfg.k;
  return s;
}

ScoreConfig score_config(const store::RunConfig& cfg) {
  ScoreConfig sc;
  sc.lambda = cfg.lambda.value_or(1.0);
  sc.top_n = cfg.top_n;
  sc.shaping.method = cfg.shaping_method;
  sc.shaping.prune_fraction = cfg.shaping_p.value_or(0.85);
  sc.shaping.clamp_percentile = cfg.clamp_percentile;
  if (cfg.clamp_value) sc.shaping.clamp_value = *cfg.clamp_value;
  sc.use_bias_in_logits = cfg.use_bias;
  sc.s_arrow_component = cfg.s_arrow_component;
  return sc;
}

Detector build_detector(const Calibration& cal, const store::RunConfig& cfg, const SubspaceSplit& split,
                        const ScoreConfig& score_cfg, std::size_t train_rows) {
  ScoreConfig sc = score_cfg;
  if (sc.shaping.method == ShapingMethod::kReact && !cfg.clamp_value) {
    sc.shaping.clamp_value =
        calibrate_react(project_bank(cal.subset, split, Component::kDecisive), sc.shaping.clamp_percentile);
  }
  ActivationBank bank = project_bank(cal.subset, split, cfg.s_arrow_component);
  if (cfg.prototype_fraction > 0.0) {
    const auto wanted = static_cast<std::size_t>(std::llround(cfg.prototype_fraction * static_cast<double>(train_rows)));
    const std::size_t k = std::clamp<std::size_t>(wanted, 1, bank.size());
    bank = prototype_bank(bank, k, cfg.seed);
  }
  return Detector(cal.head, cal.fac, split, std::move(bank), sc);
}

Detector build_detector(const Calibration& cal, const store::RunConfig& cfg, std::size_t train_rows) {
  const bool fused = cfg.method == "actsub";
  const bool shaped = cfg.shaping_method == ShapingMethod::kAshS || cfg.shaping_method == ShapingMethod::kScale;
  if (fused && !cfg.lambda) throw ConfigError("lambda is 'auto'; run calibrate with validation splits first");
  if (shaped && !cfg.shaping_p && (fused || cfg.method == "decisive"))
    throw ConfigError("shaping.p is 'auto'; run calibrate with validation splits first");
  const SubspaceSplit split = build_basis(basis_strategy(cfg), cal.head, cal.fac, cal.subset);
  return build_detector(cal, cfg, split, score_config(cfg), train_rows);
}

linalg::Vec ComponentScores::fused(double lambda) const {
  linalg::Vec out(decisive.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fuse_scores(insignificant[i], decisive[i], lambda);
  return out;
}

ComponentScores component_scores(const Detector& detector, const linalg::Mat& rows) {
  ComponentScores out;
  out.insignificant = detector.score_batch(ScoreMethod::kInsignificant, rows).scores;
  out.decisive = detector.score_batch(ScoreMethod::kDecisive, rows).scores;
  return out;
}

}  // namespace actsub::cli
