#include "actsub/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "actsub/error.hpp"
#include "actsub/scoring.hpp"

namespace actsub {

using linalg::Mat;
using linalg::Vec;

const char* to_string(ShiftMode mode) {
  switch (mode) {
    case ShiftMode::kDecisive: return "decisive";
    case ShiftMode::kInsignificant: return "insignificant";
    case ShiftMode::kMixed: return "mixed";
  }
  return "unknown";
}

ShiftMode parse_shift_mode(const std::string& text) {
  if (text == "decisive") return ShiftMode::kDecisive;
  if (text == "insignificant") return ShiftMode::kInsignificant;
  if (text == "mixed") return ShiftMode::kMixed;
  throw ConfigError("unknown shift mode '" + text + "' (expected decisive|insignificant|mixed)");
}

void SynthSpec::validate() const {
  if (c < 2) throw InvalidInput("synth: need at least 2 classes");
  if (c >= n) throw InvalidInput("synth: need c < n for a non-trivial nullspace");
  if (nuisance_dim > n - c) throw InvalidInput("synth: nuisance_dim exceeds n - c");
  if (n_train == 0 || n_id_test == 0 || n_ood_test == 0) throw InvalidInput("synth: split sizes must be positive");
  if (!std::isfinite(shift_magnitude)) throw InvalidInput("synth: shift magnitude must be finite");
  if (shift_magnitude != 0.0 && shift_mode != ShiftMode::kDecisive && nuisance_dim == 0)
    throw InvalidInput("synth: an insignificant shift needs nuisance_dim > 0");
  if (!(noise_std >= 0.0) || !(nuisance_std >= 0.0) || !(class_separation > 0.0))
    throw InvalidInput("synth: scales must be non-negative (separation positive)");
  if (!(learning_rate > 0.0)) throw InvalidInput("synth: learning rate must be positive");
}

namespace {

class Sampler {
 public:
  Sampler(const SynthSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {}

  // One split of `count` rows; labels drawn uniformly.
  ActivationBank draw(std::size_t count, bool shifted, const std::string& name) {
    std::uniform_int_distribution<std::uint32_t> label_dist(0, static_cast<std::uint32_t>(spec_.c - 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat rows(count, spec_.n);
    std::vector<std::uint32_t> labels(count);
    const double inv_c = 1.0 / static_cast<double>(spec_.c);
    const double centroid_gap = spec_.class_separation * std::sqrt(1.0 - inv_c);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t y = label_dist(rng_);
      labels[i] = y;
      auto a = rows.row(i);
      for (std::size_t d = 0; d < spec_.n; ++d) a[d] = spec_.base_level + spec_.noise_std * gauss(rng_);
      a[y] += spec_.class_separation;
      for (std::size_t d = spec_.c; d < spec_.c + spec_.nuisance_dim; ++d) a[d] += spec_.nuisance_std * gauss(rng_);

      if (shifted && spec_.shift_magnitude != 0.0) {
        const bool decisive = spec_.shift_mode != ShiftMode::kInsignificant;
        const bool insignificant = spec_.shift_mode != ShiftMode::kDecisive;
        if (decisive) {
          // Move the class mean toward the centroid of all class means.
          const double step = spec_.shift_magnitude / centroid_gap;
          for (std::size_t d = 0; d < spec_.c; ++d) {
            const double toward = spec_.class_separation * (inv_c - (d == y ? 1.0 : 0.0));
            a[d] += step * toward;
          }
        }
        if (insignificant) {
          const double per_coord = spec_.shift_magnitude / std::sqrt(static_cast<double>(spec_.nuisance_dim));
          for (std::size_t d = spec_.c; d < spec_.c + spec_.nuisance_dim; ++d) a[d] += per_coord;
        }
      }
      for (double& x : a) x = std::max(x, 0.0);
    }
    BankMeta meta{"synth:" + name + ":seed=" + std::to_string(spec_.seed), 1.0, spec_.seed};
    return ActivationBank(std::move(rows), std::move(labels), std::move(meta));
  }

 private:
  const SynthSpec& spec_;
  std::mt19937_64& rng_;
};

// Mean cross-entropy and its gradient with respect to W.
double loss_and_gradient(const Mat& w, const ActivationBank& train, std::span<const std::uint32_t> labels,
                         Mat* grad) {
  const std::size_t c = w.rows();
  const std::size_t n = w.cols();
  if (grad) *grad = Mat(c, n);
  double loss = 0.0;
  Vec logits(c);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto a = train.row(i);
    for (std::size_t k = 0; k < c; ++k) logits[k] = linalg::dot(w.row(k), a);
    const double lse = energy_score(logits);
    loss += lse - logits[labels[i]];
    if (grad) {
      for (std::size_t k = 0; k < c; ++k) {
        const double coeff = std::exp(logits[k] - lse) - (k == labels[i] ? 1.0 : 0.0);
        auto g = grad->row(k);
        for (std::size_t d = 0; d < n; ++d) g[d] += coeff * a[d];
      }
    }
  }
  const auto count = static_cast<double>(train.size());
  if (grad)
    for (double& g : grad->data()) g /= count;
  return loss / count;
}

}  // namespace

TrainResult train_head_with_history(const ActivationBank& train, std::span<const std::uint32_t> labels,
                                    std::size_t classes, const TrainOptions& options) {
  if (labels.size() != train.size()) throw InvalidInput("train_head: label count != rows");
  if (classes < 2) throw InvalidInput("train_head: need at least 2 classes");
  for (std::uint32_t y : labels)
    if (y >= classes) throw InvalidInput("train_head: label " + std::to_string(y) + " outside [0, c)");
  if (!(options.learning_rate > 0.0)) throw InvalidInput("train_head: learning rate must be positive");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat w(classes, train.dim());
  for (double& x : w.data()) x = options.init_std * gauss(rng);

  TrainResult result;
  Mat grad;
  double loss = loss_and_gradient(w, train, labels, &grad);
  if (!std::isfinite(loss)) throw NumericalFailure("train_head: initial loss is not finite");
  result.loss_history.push_back(loss);
  double lr = options.learning_rate;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Mat candidate = w;
    Mat candidate_grad;
    double candidate_loss = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t i = 0; i < candidate.data().size(); ++i)
        candidate.data()[i] = w.data()[i] - lr * grad.data()[i];
      candidate_loss = loss_and_gradient(candidate, train, labels, &candidate_grad);
      if (std::isnan(candidate_loss)) throw NumericalFailure("train_head: loss became NaN");
      if (candidate_loss <= loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) {
      result.loss_history.push_back(loss);
      break;
    }
    w = std::move(candidate);
    grad = std::move(candidate_grad);
    loss = candidate_loss;
    result.loss_history.push_back(loss);
  }
  result.head.w = std::move(w);
  return result;
}

WeightHead train_head(const ActivationBank& train, std::span<const std::uint32_t> labels, std::size_t classes,
                      const TrainOptions& options) {
  return train_head_with_history(train, labels, classes, options).head;
}

WeightHead random_head(std::size_t classes, std::size_t features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  WeightHead head;
  head.w = Mat(classes, features);
  for (double& x : head.w.data()) x = gauss(rng);
  return head;
}

World gen_world(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Sampler sampler(spec, rng);
  ActivationBank train = sampler.draw(spec.n_train, false, "train");
  std::optional<ActivationBank> val_id;
  std::optional<ActivationBank> val_ood;
  if (spec.n_val > 0) {
    val_id = sampler.draw(spec.n_val, false, "val_id");
    val_ood = sampler.draw(spec.n_val, true, "val_ood");
  }
  ActivationBank id_test = sampler.draw(spec.n_id_test, false, "id_test");
  ActivationBank ood_test = sampler.draw(spec.n_ood_test, true, "ood_test");

  TrainOptions options;
  options.epochs = spec.train_epochs;
  options.learning_rate = spec.learning_rate;
  options.init_std = spec.init_std;
  options.seed = spec.seed ^ 0x9e3779b97f4a7c15ULL;
  WeightHead head = train_head(train, *train.labels(), spec.c, options);
  return World{std::move(head), std::move(train), std::move(id_test), std::move(ood_test), std::move(val_id),
               std::move(val_ood)};
}

}  // namespace actsub
