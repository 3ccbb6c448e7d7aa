#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "actsub/linalg.hpp"

namespace actsub {

struct BankMeta {
  std::string source;
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
};

// N x d matrix of activations with optional labels and cached row norms.
class ActivationBank {
 public:
  ActivationBank() = default;
  explicit ActivationBank(linalg::Mat features,
                          std::optional<std::vector<std::uint32_t>> labels = std::nullopt,
                          BankMeta meta = {});

  const linalg::Mat& features() const { return features_; }
  const std::optional<std::vector<std::uint32_t>>& labels() const { return labels_; }
  const linalg::Vec& norms() const { return norms_; }
  const BankMeta& meta() const { return meta_; }
  BankMeta& meta() { return meta_; }

  std::size_t size() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }
  std::span<const double> row(std::size_t i) const { return features_.row(i); }

 private:
  linalg::Mat features_;
  std::optional<std::vector<std::uint32_t>> labels_;
  linalg::Vec norms_;
  BankMeta meta_;
};

}  // namespace actsub
