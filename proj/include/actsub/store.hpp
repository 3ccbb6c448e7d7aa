#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actsub/activation_bank.hpp"
#include "actsub/bank.hpp"
#include "actsub/shaping.hpp"
#include "actsub/subspace.hpp"
#include "actsub/synth.hpp"

namespace actsub::store {

// ACTB: "ACTB" | u32 version | u64 rows | u64 cols | u8 has_labels |
//       rows*cols f32 row-major | rows u32 labels (if has_labels). All LE.
struct ActbFile {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<float> values;
  std::optional<std::vector<std::uint32_t>> labels;
};

// WGT1: "WGT1" | u32 version | u64 c | u64 n | u8 has_bias |
//       c*n f32 row-major | c f32 bias (if has_bias). All LE.
struct WgtFile {
  std::uint64_t classes = 0;
  std::uint64_t features = 0;
  std::vector<float> weights;
  std::optional<std::vector<float>> bias;
};

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kActbHeaderSize = 25;
inline constexpr std::size_t kWgtHeaderSize = 25;

std::vector<std::byte> encode_actb(const ActbFile& file);
ActbFile decode_actb(std::span<const std::byte> bytes);
std::vector<std::byte> encode_wgt(const WgtFile& file);
WgtFile decode_wgt(std::span<const std::byte> bytes);

ActivationBank to_bank(const ActbFile& file, const std::string& source = {});
// Narrows to f32; throws InvalidInput if a value does not fit.
ActbFile from_bank(const ActivationBank& bank);
WeightHead to_head(const WgtFile& file);
WgtFile from_head(const WeightHead& head);

ActivationBank read_actb(const std::filesystem::path& path);
void write_actb(const std::filesystem::path& path, const ActivationBank& bank);
WeightHead read_wgt(const std::filesystem::path& path);
void write_wgt(const std::filesystem::path& path, const WeightHead& head);

// Flat key=value configuration for a scoring run. Optional fields hold
// std::nullopt for "auto".
struct RunConfig {
  std::string method = "actsub";
  std::optional<std::size_t> k;
  std::optional<double> lambda;
  std::size_t top_n = 10;
  ShapingMethod shaping_method = ShapingMethod::kScale;
  std::optional<double> shaping_p = 0.85;
  double clamp_percentile = 0.90;
  std::optional<double> clamp_value;
  double sample_fraction = 0.1;
  // Prototype count as a fraction of the training rows; 0 keeps the raw bank.
  double prototype_fraction = 0.0;
  std::uint64_t seed = 0;
  BasisKind basis = BasisKind::kSvd;
  std::optional<std::size_t> pca_d;
  bool use_bias = false;
  Component s_arrow_component = Component::kInsignificant;

  bool operator==(const RunConfig&) const = default;
};

std::string format_run_config(const RunConfig& cfg);
// Throws ConfigError on unknown or duplicate keys and unparsable values.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);
void write_run_config(const std::filesystem::path& path, const RunConfig& cfg);

std::string format_synth_spec(const SynthSpec& spec);
SynthSpec parse_synth_spec(const std::string& text);
SynthSpec read_synth_spec(const std::filesystem::path& path);

// 17 significant digits ("%.17g"); round-trips every finite double.
std::string format_double(double value);
// Shortest text that parses back to the same double (config files).
std::string format_shortest(double value);

std::vector<std::byte> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace actsub::store
