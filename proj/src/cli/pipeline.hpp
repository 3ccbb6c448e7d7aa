#pragma once

#include <optional>

#include "actsub/activation_bank.hpp"
#include "actsub/eval.hpp"
#include "actsub/scoring.hpp"
#include "actsub/store.hpp"
#include "actsub/subspace.hpp"

namespace actsub::cli {

// Training-side state shared by every command that scores activations.
struct Calibration {
  WeightHead head;
  HeadFactorization fac;
  ActivationBank subset;  // subsampled training activations
};

Calibration prepare(WeightHead head, const ActivationBank& train, const store::RunConfig& cfg);

BasisStrategy basis_strategy(const store::RunConfig& cfg);

// Builds the detector for `cfg`. Fields left on auto that scoring needs
// (lambda for actsub, shaping.p for ASH-S/SCALE) raise ConfigError; k and the
// ReAct clamp are derived from the training subset when auto.
// `train_rows` sizes the prototype bank.
Detector build_detector(const Calibration& cal, const store::RunConfig& cfg, std::size_t train_rows);

// Detector for `split` with an explicit score configuration.
Detector build_detector(const Calibration& cal, const store::RunConfig& cfg, const SubspaceSplit& split,
                        const ScoreConfig& score_cfg, std::size_t train_rows);

// Score configuration from the run config; lambda/p on auto become
// placeholders (1 and 0.85) that callers must overwrite before use.
ScoreConfig score_config(const store::RunConfig& cfg);

// Per-row component scores, fused for any lambda without rescoring.
struct ComponentScores {
  linalg::Vec insignificant;
  linalg::Vec decisive;

  linalg::Vec fused(double lambda) const;
};

ComponentScores component_scores(const Detector& detector, const linalg::Mat& rows);

}  // namespace actsub::cli
