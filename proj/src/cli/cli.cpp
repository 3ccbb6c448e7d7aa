#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <sstream>

#include "actsub/error.hpp"
#include "commands.hpp"

namespace actsub::cli {

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError: return 2;
    case ErrorCode::kNumericalFailure: return 4;
    case ErrorCode::kInvalidInput:
    case ErrorCode::kFormatError:
    case ErrorCode::kDegenerateBasis:
    case ErrorCode::kDegenerateActivation: return 3;
  }
  return 3;
}

const std::vector<std::string> kMethods{"actsub", "energy", "msp", "decisive", "insignificant"};
const std::vector<std::string> kBases{"svd", "pca", "si-pca", "nullspace"};
const std::vector<std::string> kComponents{"a", "dec", "insig"};

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(part);
  }
  return out;
}

void check_members(const std::vector<std::string>& values, const std::vector<std::string>& allowed,
                   const std::string& flag) {
  for (const auto& v : values)
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw CLI::ValidationError(flag, "'" + v + "' is not one of " + CLI::detail::join(allowed, ","));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-hoc OOD detection with decisive/insignificant activation subspaces"};
  app.name("actsub");
  app.require_subcommand(1);
  const auto existing = CLI::ExistingFile;

  CalibrateOptions cal;
  auto* c = app.add_subcommand("calibrate", "choose k, lambda, shaping p and the ReAct clamp; write a run config");
  c->add_option("--weights", cal.weights, "WGT1 head")->required()->check(existing);
  c->add_option("--train", cal.train, "ACTB training activations")->required()->check(existing);
  c->add_option("--val-id", cal.val_id, "ACTB validation ID activations")->check(existing);
  c->add_option("--val-ood", cal.val_ood, "ACTB validation OOD activations")->check(existing);
  c->add_option("--config", cal.config, "starting run config")->check(existing);
  c->add_option("--out", cal.out, "run config to write")->required();

  ScoreOptions sc;
  auto* s = app.add_subcommand("score", "score every row of an activation file");
  s->add_option("--weights", sc.weights)->required()->check(existing);
  s->add_option("--train", sc.train, "required except for energy/msp")->check(existing);
  s->add_option("--config", sc.config)->check(existing);
  s->add_option("--input", sc.input)->required()->check(existing);
  s->add_option("--method", sc.method, "defaults to the config's method")->check(CLI::IsMember(kMethods));
  s->add_option("--out", sc.out, "CSV index,score,method")->required();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "AUROC and FPR at a TPR from two score CSVs");
  e->add_option("--id", ev.id)->required()->check(existing);
  e->add_option("--ood", ev.ood)->required()->check(existing);
  e->add_option("--tpr", ev.tpr)->capture_default_str();
  e->add_option("--out", ev.out)->required();
  e->add_option("--plot-data", ev.plot_data, "histogram CSV of both score sets");
  e->add_option("--bins", ev.bins)->capture_default_str();

  DiagOptions dg;
  std::vector<std::string> diag_bases;
  auto* d = app.add_subcommand("diag", "alignment profile of p and the norm-balance curve");
  d->add_option("--weights", dg.weights)->required()->check(existing);
  d->add_option("--train", dg.train)->required()->check(existing);
  d->add_option("--config", dg.config)->check(existing);
  d->add_option("--basis", diag_bases, "svd|pca|si-pca|nullspace, comma separated or repeated");
  d->add_option("--out", dg.out, "CSV basis,index,magnitude")->required();
  d->add_option("--curve-out", dg.curve_out, "norm-balance CSV (default <out>.curve.csv)");

  AblateOptions ab;
  std::vector<std::string> ablate_bases;
  std::vector<std::string> ablate_components;
  auto* a = app.add_subcommand("ablate", "sweep lambda, p, bases and S-> components on validation splits");
  a->add_option("--weights", ab.weights)->required()->check(existing);
  a->add_option("--train", ab.train)->required()->check(existing);
  a->add_option("--val-id", ab.val_id)->required()->check(existing);
  a->add_option("--val-ood", ab.val_ood)->required()->check(existing);
  a->add_option("--config", ab.config)->check(existing);
  a->add_option("--grid", ab.grids, "lambda=0,0.5,1 or p=0.75..0.95[:step]");
  a->add_option("--bases", ablate_bases, "comma separated");
  a->add_option("--s-arrow-component", ablate_components, "a|dec|insig, comma separated");
  a->add_option("--out", ab.out)->required();

  SynthOptions sy;
  auto* y = app.add_subcommand("synth", "generate a synthetic world");
  y->add_option("--spec", sy.spec)->required()->check(existing);
  y->add_option("--out-dir", sy.out_dir)->required();

  try {
    app.parse(argc, argv);
    if (!diag_bases.empty()) dg.bases = split_commas(diag_bases);
    if (!ablate_bases.empty()) ab.bases = split_commas(ablate_bases);
    ab.s_arrow_components = split_commas(ablate_components);
    check_members(dg.bases, kBases, "--basis");
    check_members(ab.bases, kBases, "--bases");
    check_members(ab.s_arrow_components, kComponents, "--s-arrow-component");
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c) cmd_calibrate(cal, out, err);
    else if (*s) cmd_score(sc, out, err);
    else if (*e) cmd_eval(ev, out, err);
    else if (*d) cmd_diag(dg, out, err);
    else if (*a) cmd_ablate(ab, out, err);
    else if (*y) cmd_synth(sy, out, err);
  } catch (const FormatError& ex) {
    err << "error: " << to_string(ex.kind()) << " at " << ex.position() << ": " << ex.what() << "\n";
    return exit_code(ex.code());
  } catch (const Error& ex) {
    err << "error: " << to_string(ex.code()) << ": " << ex.what() << "\n";
    return exit_code(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace actsub::cli
