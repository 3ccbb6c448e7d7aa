#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "actsub/linalg.hpp"

namespace actsub {

struct EvalResult {
  double auroc = 0.0;
  double fpr_at_tpr = 0.0;
  double tpr_target = 0.95;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

// Mann-Whitney estimate of P(id > ood) + 0.5 P(id == ood).
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

// Threshold tau = the ceil(tpr_target * n_id)-th largest ID score; returns
// the fraction of OOD scores >= tau.
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double tpr_target = 0.95);

EvalResult evaluate(std::span<const double> id_scores, std::span<const double> ood_scores,
                    double tpr_target = 0.95);

// Model-selection objective used by the calibration grids.
enum class Objective { kAurocMinusFpr, kAuroc };

double objective_value(const EvalResult& r, Objective objective);

// Scores for the validation ID and OOD splits under one candidate value.
using CandidateScorer =
    std::function<std::pair<linalg::Vec, linalg::Vec>(double candidate)>;

struct GridPoint {
  double candidate = 0.0;
  EvalResult result;
  double objective = 0.0;
};

struct GridSearch {
  double best = 0.0;
  std::vector<GridPoint> points;  // in candidate order
};

// Evaluates every candidate and picks the maximum objective; ties go to the
// smaller candidate value.
GridSearch grid_search(std::span<const double> candidates, const CandidateScorer& scorer,
                       Objective objective = Objective::kAurocMinusFpr, double tpr_target = 0.95);

inline const std::vector<double> kDefaultLambdaGrid{0.0, 0.25, 0.5, 1.0, 2.0};
inline const std::vector<double> kDefaultPruneGrid{0.75, 0.80, 0.85, 0.90, 0.95};

double calibrate_lambda(std::span<const double> candidates, const CandidateScorer& scorer,
                        Objective objective = Objective::kAurocMinusFpr);
double calibrate_shaping(std::span<const double> candidates, const CandidateScorer& scorer,
                         Objective objective = Objective::kAurocMinusFpr);

// Equal-width histogram over [lo, hi]; values outside land in the edge bins.
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

}  // namespace actsub
