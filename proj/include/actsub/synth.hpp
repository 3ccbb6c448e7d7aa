#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actsub/activation_bank.hpp"
#include "actsub/subspace.hpp"

namespace actsub {

enum class ShiftMode { kDecisive, kInsignificant, kMixed };

const char* to_string(ShiftMode mode);
ShiftMode parse_shift_mode(const std::string& text);

// Synthetic world: coordinates [0, c) carry the class signal, [c, c +
// nuisance_dim) carry extra label-independent variance, the rest is noise.
struct SynthSpec {
  std::size_t n = 64;
  std::size_t c = 8;
  std::size_t n_train = 5000;
  std::size_t n_id_test = 1000;
  std::size_t n_ood_test = 1000;
  // Size of each validation split (ID and OOD); 0 disables them.
  std::size_t n_val = 0;
  ShiftMode shift_mode = ShiftMode::kInsignificant;
  double shift_magnitude = 0.0;
  std::size_t nuisance_dim = 16;
  std::uint64_t seed = 0;

  double class_separation = 4.0;
  double base_level = 1.0;
  double noise_std = 0.5;
  double nuisance_std = 1.0;

  std::size_t train_epochs = 300;
  double learning_rate = 1.0;
  double init_std = 0.01;

  // Throws InvalidInput unless 2 <= c < n and nuisance_dim <= n - c.
  void validate() const;
};

struct World {
  WeightHead head;
  ActivationBank train;
  ActivationBank id_test;
  ActivationBank ood_test;
  std::optional<ActivationBank> val_id;
  std::optional<ActivationBank> val_ood;
};

World gen_world(const SynthSpec& spec);

struct TrainOptions {
  std::size_t epochs = 300;
  double learning_rate = 1.0;
  double init_std = 0.01;
  std::uint64_t seed = 0;
};

// Full-batch gradient descent on mean softmax cross-entropy (no bias).
// A step that raises the loss is rejected and the learning rate halved, so
// the recorded loss never increases.
struct TrainResult {
  WeightHead head;
  std::vector<double> loss_history;  // loss before training, then after each epoch
};

TrainResult train_head_with_history(const ActivationBank& train, std::span<const std::uint32_t> labels,
                                    std::size_t classes, const TrainOptions& options);
WeightHead train_head(const ActivationBank& train, std::span<const std::uint32_t> labels, std::size_t classes,
                      const TrainOptions& options);

// Gaussian N(0, 1) head.
WeightHead random_head(std::size_t classes, std::size_t features, std::uint64_t seed);

}  // namespace actsub
