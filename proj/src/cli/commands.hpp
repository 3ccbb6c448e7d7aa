#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "actsub/bank.hpp"

namespace actsub::cli {

using Path = std::filesystem::path;

struct CalibrateOptions {
  Path weights;
  Path train;
  std::optional<Path> val_id;
  std::optional<Path> val_ood;
  std::optional<Path> config;
  Path out;
};

struct ScoreOptions {
  Path weights;
  std::optional<Path> train;
  std::optional<Path> config;
  Path input;
  std::string method;  // empty: the config's method
  Path out;
};

struct EvalOptions {
  Path id;
  Path ood;
  double tpr = 0.95;
  Path out;
  std::optional<Path> plot_data;
  std::size_t bins = 50;
};

struct DiagOptions {
  Path weights;
  Path train;
  std::optional<Path> config;
  std::vector<std::string> bases{"svd"};
  Path out;
  std::optional<Path> curve_out;
};

struct AblateOptions {
  Path weights;
  Path train;
  Path val_id;
  Path val_ood;
  std::optional<Path> config;
  std::vector<std::string> grids;
  std::vector<std::string> bases{"svd"};
  std::vector<std::string> s_arrow_components;
  Path out;
};

struct SynthOptions {
  Path spec;
  Path out_dir;
};

void cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err);
void cmd_score(const ScoreOptions& opt, std::ostream& out, std::ostream& err);
void cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
void cmd_diag(const DiagOptions& opt, std::ostream& out, std::ostream& err);
void cmd_ablate(const AblateOptions& opt, std::ostream& out, std::ostream& err);
void cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err);

// "name=v1,v2,..." or "name=lo..hi[:step]" (step defaults to 0.05).
struct GridSpec {
  std::string name;
  std::vector<double> values;
};

GridSpec parse_grid(const std::string& text);

}  // namespace actsub::cli
