#pragma once

#include <limits>
#include <span>
#include <string>

#include "actsub/activation_bank.hpp"
#include "actsub/linalg.hpp"

namespace actsub {

enum class ShapingMethod { kIdentity, kReact, kAshS, kScale };

const char* to_string(ShapingMethod method);
ShapingMethod parse_shaping_method(const std::string& text);

struct ShapingConfig {
  ShapingMethod method = ShapingMethod::kScale;
  // ASH-S / SCALE: fraction of entries at or below the threshold percentile.
  double prune_fraction = 0.85;
  // ReAct: percentile used to calibrate clamp_value.
  double clamp_percentile = 0.90;
  // ReAct: upper clamp. Infinity until calibrated.
  double clamp_value = std::numeric_limits<double>::infinity();

  // Throws InvalidInput when the parameters of the selected method are out of
  // range (prune_fraction in [0, 1), clamp_percentile in (0, 1]).
  void validate() const;
};

// Nearest-rank percentile of every entry of the bank pooled together.
double calibrate_react(const ActivationBank& train, double clamp_percentile);

// Applies the shaping function. ASH-S and SCALE share the threshold
// t = percentile(v, prune_fraction) and the factor exp(sum(v) / sum(v > t));
// ASH-S zeroes entries <= t, SCALE keeps them. Throws DegenerateActivation
// when the surviving sum is not positive.
linalg::Vec shape(const ShapingConfig& cfg, std::span<const double> v);

}  // namespace actsub
