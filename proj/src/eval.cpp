#include "actsub/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actsub/error.hpp"

namespace actsub {

using linalg::Vec;

namespace {

void require_scores(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) throw InvalidInput("metrics need non-empty ID and OOD scores");
  if (!linalg::all_finite(id_scores) || !linalg::all_finite(ood_scores))
    throw InvalidInput("metrics need finite scores");
}

}  // namespace

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_scores(id_scores, ood_scores);
  Vec ood(ood_scores.begin(), ood_scores.end());
  std::sort(ood.begin(), ood.end());
  // For each ID score count OOD scores strictly below and equal to it.
  double wins = 0.0;
  for (double s : id_scores) {
    const auto lower = std::lower_bound(ood.begin(), ood.end(), s);
    const auto upper = std::upper_bound(lower, ood.end(), s);
    wins += static_cast<double>(lower - ood.begin()) + 0.5 * static_cast<double>(upper - lower);
  }
  return wins / (static_cast<double>(id_scores.size()) * static_cast<double>(ood.size()));
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target) {
  require_scores(id_scores, ood_scores);
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) throw InvalidInput("tpr_target must lie in (0, 1]");
  Vec id(id_scores.begin(), id_scores.end());
  std::sort(id.begin(), id.end(), std::greater<>());
  const auto n_id = static_cast<double>(id.size());
  const auto rank = static_cast<std::size_t>(std::clamp(std::ceil(tpr_target * n_id - 1e-9), 1.0, n_id));
  const double tau = id[rank - 1];
  const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(), [&](double s) { return s >= tau; });
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

EvalResult evaluate(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target) {
  EvalResult r;
  r.auroc = auroc(id_scores, ood_scores);
  r.fpr_at_tpr = fpr_at_tpr(id_scores, ood_scores, tpr_target);
  r.tpr_target = tpr_target;
  r.n_id = id_scores.size();
  r.n_ood = ood_scores.size();
  return r;
}

double objective_value(const EvalResult& r, Objective objective) {
  return objective == Objective::kAuroc ? r.auroc : r.auroc - r.fpr_at_tpr;
}

GridSearch grid_search(std::span<const double> candidates, const CandidateScorer& scorer, Objective objective,
                       double tpr_target) {
  if (candidates.empty()) throw InvalidInput("grid search needs at least one candidate");
  GridSearch out;
  out.points.reserve(candidates.size());
  for (double c : candidates) {
    const auto [id, ood] = scorer(c);
    GridPoint point;
    point.candidate = c;
    point.result = evaluate(id, ood, tpr_target);
    point.objective = objective_value(point.result, objective);
    out.points.push_back(point);
  }
  const GridPoint* best = &out.points.front();
  for (const auto& p : out.points) {
    if (p.objective > best->objective || (p.objective == best->objective && p.candidate < best->candidate))
      best = &p;
  }
  out.best = best->candidate;
  return out;
}

double calibrate_lambda(std::span<const double> candidates, const CandidateScorer& scorer, Objective objective) {
  for (double c : candidates)
    if (!(c >= 0.0)) throw InvalidInput("lambda candidates must be >= 0");
  return grid_search(candidates, scorer, objective).best;
}

double calibrate_shaping(std::span<const double> candidates, const CandidateScorer& scorer, Objective objective) {
  for (double c : candidates)
    if (!(c >= 0.0 && c < 1.0)) throw InvalidInput("prune fraction candidates must lie in [0, 1)");
  return grid_search(candidates, scorer, objective).best;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw InvalidInput("histogram needs at least one bin");
  if (!(hi > lo)) hi = lo + 1.0;
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    const double pos = std::floor((v - lo) / width);
    const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++h.counts[idx];
  }
  return h;
}

}  // namespace actsub
