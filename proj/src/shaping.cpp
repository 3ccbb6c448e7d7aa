#include "actsub/shaping.hpp"

#include <algorithm>
#include <cmath>

#include "actsub/error.hpp"

namespace actsub {

const char* to_string(ShapingMethod method) {
  switch (method) {
    case ShapingMethod::kIdentity: return "identity";
    case ShapingMethod::kReact: return "react";
    case ShapingMethod::kAshS: return "ash-s";
    case ShapingMethod::kScale: return "scale";
  }
  return "unknown";
}

ShapingMethod parse_shaping_method(const std::string& text) {
  if (text == "identity") return ShapingMethod::kIdentity;
  if (text == "react") return ShapingMethod::kReact;
  if (text == "ash-s") return ShapingMethod::kAshS;
  if (text == "scale") return ShapingMethod::kScale;
  throw ConfigError("unknown shaping method '" + text + "' (expected identity|react|ash-s|scale)");
}

void ShapingConfig::validate() const {
  switch (method) {
    case ShapingMethod::kIdentity:
      return;
    case ShapingMethod::kReact:
      if (!(clamp_percentile > 0.0 && clamp_percentile <= 1.0))
        throw InvalidInput("ReAct clamp percentile must lie in (0, 1]");
      if (std::isnan(clamp_value)) throw InvalidInput("ReAct clamp value is NaN");
      return;
    case ShapingMethod::kAshS:
    case ShapingMethod::kScale:
      if (!(prune_fraction >= 0.0 && prune_fraction < 1.0))
        throw InvalidInput("prune fraction must lie in [0, 1)");
      return;
  }
}

double calibrate_react(const ActivationBank& train, double clamp_percentile) {
  if (train.size() == 0) throw InvalidInput("calibrate_react: empty bank");
  return linalg::percentile(train.features().data(), clamp_percentile);
}

linalg::Vec shape(const ShapingConfig& cfg, std::span<const double> v) {
  cfg.validate();
  if (!linalg::all_finite(v)) throw InvalidInput("shape: non-finite activation");
  linalg::Vec out(v.begin(), v.end());
  switch (cfg.method) {
    case ShapingMethod::kIdentity:
      return out;
    case ShapingMethod::kReact:
      for (double& x : out) x = std::min(x, cfg.clamp_value);
      return out;
    case ShapingMethod::kAshS:
    case ShapingMethod::kScale: {
      if (v.empty()) throw DegenerateActivation("shape: empty activation");
      const double threshold = linalg::percentile(v, cfg.prune_fraction);
      double total = 0.0;
      double kept = 0.0;
      for (double x : v) {
        total += x;
        if (x > threshold) kept += x;
      }
      if (!(kept > 0.0)) {
        throw DegenerateActivation("shape: no positive mass above the pruning threshold");
      }
      const double factor = std::exp(total / kept);
      if (!std::isfinite(factor)) throw DegenerateActivation("shape: scaling factor overflows");
      for (double& x : out) {
        if (cfg.method == ShapingMethod::kAshS && x <= threshold) x = 0.0;
        else x *= factor;
      }
      return out;
    }
  }
  return out;
}

}  // namespace actsub
