#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "actsub/activation_bank.hpp"
#include "actsub/subspace.hpp"

namespace actsub {

// Uniform sample without replacement of round(fraction * N) rows (min 1),
// kept in original row order. fraction == 1 returns the bank unchanged.
ActivationBank subsample(const ActivationBank& bank, double fraction, std::uint64_t seed);

// Which part of each activation a bank (or a cosine query) uses.
enum class Component { kFull, kDecisive, kInsignificant };

const char* to_string(Component component);
Component parse_component(const std::string& text);

linalg::Vec project_component(const SubspaceSplit& split, Component component, std::span<const double> a);

// Every row replaced by its insignificant projection (or the chosen component).
ActivationBank project_bank(const ActivationBank& bank, const SubspaceSplit& split,
                            Component component = Component::kInsignificant);

// Cosine similarity with zero-norm vectors defined as 0.
double cosine_similarity(std::span<const double> a, double a_norm, std::span<const double> b,
                         double b_norm);

// Exact top-n cosine similarities against the bank rows, descending, ties to
// the lower row index.
linalg::Vec top_n_cosine(const ActivationBank& bank, std::span<const double> query, std::size_t n);

// k-means centroids of the bank rows; labels are dropped.
ActivationBank prototype_bank(const ActivationBank& bank, std::size_t k, std::uint64_t seed,
                              std::size_t max_iter = 100);

}  // namespace actsub
