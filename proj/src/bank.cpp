#include "actsub/bank.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include "actsub/error.hpp"
#include "actsub/parallel.hpp"

namespace actsub {

using linalg::Mat;
using linalg::Vec;

ActivationBank::ActivationBank(Mat features, std::optional<std::vector<std::uint32_t>> labels,
                               BankMeta meta)
    : features_(std::move(features)), labels_(std::move(labels)), meta_(std::move(meta)) {
  if (features_.rows() == 0) throw InvalidInput("activation bank must have at least one row");
  if (!linalg::all_finite(features_.data())) throw InvalidInput("activation bank has non-finite entries");
  if (labels_ && labels_->size() != features_.rows()) {
    throw InvalidInput("label count " + std::to_string(labels_->size()) + " != rows " +
                       std::to_string(features_.rows()));
  }
  norms_.resize(features_.rows());
  for (std::size_t i = 0; i < features_.rows(); ++i) norms_[i] = linalg::norm(features_.row(i));
}

ActivationBank subsample(const ActivationBank& bank, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInput("subsample: fraction must lie in (0, 1]");
  if (fraction == 1.0) return bank;
  const std::size_t n = bank.size();
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);

  Mat rows(0, bank.dim());
  std::optional<std::vector<std::uint32_t>> labels;
  if (bank.labels()) labels.emplace();
  for (std::size_t idx : picked) {
    rows.append_row(bank.row(idx));
    if (labels) labels->push_back((*bank.labels())[idx]);
  }
  BankMeta meta = bank.meta();
  meta.sample_fraction = bank.meta().sample_fraction * fraction;
  meta.seed = seed;
  return ActivationBank(std::move(rows), std::move(labels), std::move(meta));
}

const char* to_string(Component component) {
  switch (component) {
    case Component::kFull: return "a";
    case Component::kDecisive: return "dec";
    case Component::kInsignificant: return "insig";
  }
  return "unknown";
}

Component parse_component(const std::string& text) {
  if (text == "a" || text == "full") return Component::kFull;
  if (text == "dec" || text == "decisive") return Component::kDecisive;
  if (text == "insig" || text == "insignificant") return Component::kInsignificant;
  throw ConfigError("unknown component '" + text + "' (expected a|dec|insig)");
}

Vec project_component(const SubspaceSplit& split, Component component, std::span<const double> a) {
  switch (component) {
    case Component::kFull:
      if (a.size() != split.features()) throw InvalidInput("component: dimension mismatch");
      return Vec(a.begin(), a.end());
    case Component::kDecisive: return project_decisive(split, a);
    case Component::kInsignificant: return project_insignificant(split, a);
  }
  throw InvalidInput("component: unknown kind");
}

ActivationBank project_bank(const ActivationBank& bank, const SubspaceSplit& split, Component component) {
  if (bank.dim() != split.features()) {
    throw InvalidInput("project_bank: bank dim " + std::to_string(bank.dim()) + " != split dim " +
                       std::to_string(split.features()));
  }
  Mat rows(bank.size(), bank.dim());
  parallel_for(bank.size(), [&](std::size_t i) {
    const Vec projected = project_component(split, component, bank.row(i));
    std::copy(projected.begin(), projected.end(), rows.row(i).begin());
  });
  BankMeta meta = bank.meta();
  meta.source += std::string(" | projected:") + to_string(component);
  return ActivationBank(std::move(rows), bank.labels(), std::move(meta));
}

double cosine_similarity(std::span<const double> a, double a_norm, std::span<const double> b, double b_norm) {
  if (a_norm == 0.0 || b_norm == 0.0) return 0.0;
  const double c = linalg::dot(a, b) / (a_norm * b_norm);
  return std::clamp(c, -1.0, 1.0);
}

Vec top_n_cosine(const ActivationBank& bank, std::span<const double> query, std::size_t n) {
  if (query.size() != bank.dim()) {
    throw InvalidInput("top_n_cosine: query length " + std::to_string(query.size()) + " != bank dim " +
                       std::to_string(bank.dim()));
  }
  if (n == 0 || n > bank.size()) {
    throw InvalidInput("top_n_cosine: n = " + std::to_string(n) + " outside [1, " +
                       std::to_string(bank.size()) + "]");
  }
  const double query_norm = linalg::norm(query);
  Vec sims(bank.size());
  parallel_for(bank.size(), [&](std::size_t i) {
    sims[i] = cosine_similarity(bank.row(i), bank.norms()[i], query, query_norm);
  });
  std::vector<std::size_t> order(bank.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) { return sims[a] > sims[b] || (sims[a] == sims[b] && a < b); });
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sims[order[i]];
  return out;
}

ActivationBank prototype_bank(const ActivationBank& bank, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  Mat centroids = linalg::kmeans(bank.features(), k, seed, max_iter);
  BankMeta meta = bank.meta();
  meta.source += " | prototypes:k=" + std::to_string(k) + ",seed=" + std::to_string(seed);
  meta.seed = seed;
  return ActivationBank(std::move(centroids), std::nullopt, std::move(meta));
}

}  // namespace actsub
