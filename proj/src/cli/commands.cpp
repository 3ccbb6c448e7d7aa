#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "actsub/error.hpp"
#include "actsub/eval.hpp"
#include "actsub/store.hpp"
#include "actsub/synth.hpp"
#include "csv.hpp"
#include "pipeline.hpp"

namespace actsub::cli {

namespace {

using linalg::Mat;
using linalg::Vec;
using store::format_shortest;

store::RunConfig load_config(const std::optional<Path>& path) {
  return path ? store::read_run_config(*path) : store::RunConfig{};
}

void check_dim(const ActivationBank& bank, const WeightHead& head, const std::string& what) {
  if (bank.dim() != head.features()) {
    throw InvalidInput(what + " has " + std::to_string(bank.dim()) + " features, head expects " +
                       std::to_string(head.features()));
  }
}

bool uses_prune_fraction(ShapingMethod m) { return m == ShapingMethod::kAshS || m == ShapingMethod::kScale; }

double parse_number(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(context + ": '" + text + "' is not a finite number");
  return v;
}

double round_grid(double v) { return std::round(v * 1e10) / 1e10; }

std::size_t sign_changes(const Vec& gap) {
  std::size_t count = 0;
  for (std::size_t k = 1; k < gap.size(); ++k)
    if ((gap[k - 1] > 0.0) != (gap[k] > 0.0)) ++count;
  return count;
}

std::size_t train_accuracy_hits(const WeightHead& head, const ActivationBank& bank) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const Vec l = head.logits(bank.row(i), false);
    const auto arg = static_cast<std::uint32_t>(std::max_element(l.begin(), l.end()) - l.begin());
    if (bank.labels() && (*bank.labels())[i] == arg) ++hits;
  }
  return hits;
}

Mat profile_basis(BasisKind kind, const HeadFactorization& fac, const ActivationBank& subset) {
  switch (kind) {
    case BasisKind::kSvd: return fac.full_basis();
    case BasisKind::kNullspace: return fac.nullspace_basis();
    case BasisKind::kPca: return pca(subset).components;
    case BasisKind::kSiPca: return pca(subset, &fac.p).components;
  }
  throw InvalidInput("diag: unknown basis");
}

Path default_curve_path(const Path& out) {
  Path p = out;
  p.replace_extension();
  p += ".curve.csv";
  return p;
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("grid '" + text + "': expected name=values");
  GridSpec g;
  g.name = text.substr(0, eq);
  const std::string body = text.substr(eq + 1);
  const auto dots = body.find("..");
  if (dots != std::string::npos) {
    const auto colon = body.find(':', dots);
    const double lo = parse_number(body.substr(0, dots), "grid " + g.name);
    const double hi = parse_number(body.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2),
                                   "grid " + g.name);
    const double step = colon == std::string::npos ? 0.05 : parse_number(body.substr(colon + 1), "grid " + g.name);
    if (step <= 0.0 || hi < lo) throw ConfigError("grid " + g.name + ": need lo <= hi and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    if (count > 100000) throw ConfigError("grid " + g.name + ": too many values");
    for (std::size_t i = 0; i <= count; ++i) g.values.push_back(round_grid(lo + static_cast<double>(i) * step));
  } else {
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) g.values.push_back(round_grid(parse_number(item, "grid " + g.name)));
  }
  if (g.values.empty()) throw ConfigError("grid " + g.name + ": no values");
  return g;
}

void cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream&) {
  store::RunConfig cfg = load_config(opt.config);
  const bool has_val = opt.val_id && opt.val_ood;
  if (opt.val_id.has_value() != opt.val_ood.has_value())
    throw ConfigError("calibrate: --val-id and --val-ood must be given together");
  const bool need_p = uses_prune_fraction(cfg.shaping_method) && !cfg.shaping_p;
  if ((!cfg.lambda || need_p) && !has_val)
    throw ConfigError("calibrate: lambda/shaping.p are 'auto' but no validation splits were given");
  if (!uses_prune_fraction(cfg.shaping_method) && !cfg.shaping_p) cfg.shaping_p = 0.85;

  const ActivationBank train = store::read_actb(opt.train);
  const Calibration cal = prepare(store::read_wgt(opt.weights), train, cfg);

  const NormBalance balance = norm_balance(cal.fac, cal.subset);
  if (cfg.basis == BasisKind::kSvd && !cfg.k) cfg.k = select_k(cal.fac, cal.subset);
  const SubspaceSplit split = build_basis(basis_strategy(cfg), cal.head, cal.fac, cal.subset);
  if (cfg.basis == BasisKind::kPca || cfg.basis == BasisKind::kSiPca) cfg.pca_d = split.k;

  if (cfg.shaping_method == ShapingMethod::kReact && !cfg.clamp_value)
    cfg.clamp_value = calibrate_react(project_bank(cal.subset, split, Component::kDecisive), cfg.clamp_percentile);

  if (need_p || !cfg.lambda) {
    const ActivationBank val_id = store::read_actb(*opt.val_id);
    const ActivationBank val_ood = store::read_actb(*opt.val_ood);
    check_dim(val_id, cal.head, "validation ID bank");
    check_dim(val_ood, cal.head, "validation OOD bank");
    Detector det = build_detector(cal, cfg, split, score_config(cfg), train.size());
    if (need_p) {
      const GridSearch g = grid_search(kDefaultPruneGrid, [&](double p) {
        det.config().shaping.prune_fraction = p;
        return std::pair{det.score_batch(ScoreMethod::kDecisive, val_id.features()).scores,
                         det.score_batch(ScoreMethod::kDecisive, val_ood.features()).scores};
      });
      cfg.shaping_p = g.best;
      det.config().shaping.prune_fraction = g.best;
    }
    if (!cfg.lambda) {
      const ComponentScores id = component_scores(det, val_id.features());
      const ComponentScores ood = component_scores(det, val_ood.features());
      cfg.lambda = calibrate_lambda(kDefaultLambdaGrid, [&](double lambda) {
        return std::pair{id.fused(lambda), ood.fused(lambda)};
      });
    }
  }

  store::write_run_config(opt.out, cfg);

  out << "basis=" << to_string(cfg.basis) << " decisive_dims=" << split.k << " rank=" << cal.fac.rank
      << " nullspace_dim=" << cal.fac.nullspace_dim << "\n";
  if (cfg.k) out << "k=" << *cfg.k << "\n";
  out << "lambda=" << format_shortest(*cfg.lambda) << "\n";
  out << "shaping=" << to_string(cfg.shaping_method) << " p=" << format_shortest(*cfg.shaping_p);
  if (cfg.clamp_value) out << " clamp_value=" << format_shortest(*cfg.clamp_value);
  out << "\n";
  const Vec& gap = balance.signed_gap;
  const std::size_t kb = cfg.k ? *cfg.k : split.k;
  out << "norm balance (mean ||a_insig|| - ||a_dec||): k=0 " << format_shortest(gap.front()) << ", k="
      << std::min(kb, gap.size() - 1) << " " << format_shortest(gap[std::min(kb, gap.size() - 1)]) << ", k="
      << gap.size() - 1 << " " << format_shortest(gap.back()) << ", sign changes " << sign_changes(gap) << "\n";
  out << "wrote " << opt.out.string() << "\n";
}

void cmd_score(const ScoreOptions& opt, std::ostream& out, std::ostream& err) {
  store::RunConfig cfg = load_config(opt.config);
  if (!opt.method.empty()) cfg.method = opt.method;
  const ScoreMethod method = parse_score_method(cfg.method);
  const WeightHead head = store::read_wgt(opt.weights);
  const ActivationBank input = store::read_actb(opt.input);
  check_dim(input, head, "input bank");

  ScoreReport report;
  if (method == ScoreMethod::kEnergy || method == ScoreMethod::kMsp) {
    const Detector det(head, score_config(cfg));
    report = det.score_batch(method, input.features(), cfg.seed);
  } else {
    if (!opt.train) throw ConfigError("score: --train is required for method " + cfg.method);
    const ActivationBank train = store::read_actb(*opt.train);
    const Calibration cal = prepare(head, train, cfg);
    const Detector det = build_detector(cal, cfg, train.size());
    report = det.score_batch(method, input.features(), cfg.seed);
  }
  store::write_text_atomic(opt.out, format_score_csv(report));
  if (report.nonpositive_decisive > 0) {
    err << "warning: " << report.nonpositive_decisive
        << " rows have a non-positive decisive score; their fused scores keep the raw product\n";
  }
  out << "scored " << report.scores.size() << " rows with " << report.method << " -> " << opt.out.string() << "\n";
}

void cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream&) {
  const ScoreCsv id = read_score_csv(opt.id);
  const ScoreCsv ood = read_score_csv(opt.ood);
  if (id.method != ood.method)
    throw InvalidInput("eval: ID scores use '" + id.method + "', OOD scores use '" + ood.method + "'");
  if (!(opt.tpr > 0.0 && opt.tpr <= 1.0)) throw ConfigError("eval: --tpr must lie in (0, 1]");
  const EvalResult r = evaluate(id.scores, ood.scores, opt.tpr);

  CsvWriter csv({"auroc", "fpr_at_tpr", "tpr_target", "n_id", "n_ood"});
  csv.add_row({csv_field(r.auroc), csv_field(r.fpr_at_tpr), csv_field(r.tpr_target), std::to_string(r.n_id),
               std::to_string(r.n_ood)});
  store::write_text_atomic(opt.out, csv.str());

  if (opt.plot_data) {
    if (opt.bins == 0) throw ConfigError("eval: --bins must be positive");
    double lo = std::min(*std::min_element(id.scores.begin(), id.scores.end()),
                         *std::min_element(ood.scores.begin(), ood.scores.end()));
    double hi = std::max(*std::max_element(id.scores.begin(), id.scores.end()),
                         *std::max_element(ood.scores.begin(), ood.scores.end()));
    if (hi <= lo) hi = lo + 1.0;
    const Histogram hid = histogram(id.scores, opt.bins, lo, hi);
    const Histogram hood = histogram(ood.scores, opt.bins, lo, hi);
    CsvWriter plot({"bin", "lo", "hi", "id_count", "ood_count"});
    const double width = (hi - lo) / static_cast<double>(opt.bins);
    for (std::size_t b = 0; b < opt.bins; ++b) {
      plot.add_row({std::to_string(b), csv_field(lo + width * static_cast<double>(b)),
                    csv_field(b + 1 == opt.bins ? hi : lo + width * static_cast<double>(b + 1)),
                    std::to_string(hid.counts[b]), std::to_string(hood.counts[b])});
    }
    store::write_text_atomic(*opt.plot_data, plot.str());
  }
  out << "auroc=" << format_shortest(r.auroc) << " fpr@" << format_shortest(r.tpr_target) << "="
      << format_shortest(r.fpr_at_tpr) << " n_id=" << r.n_id << " n_ood=" << r.n_ood << "\n";
}

void cmd_diag(const DiagOptions& opt, std::ostream& out, std::ostream&) {
  const store::RunConfig cfg = load_config(opt.config);
  const Calibration cal = prepare(store::read_wgt(opt.weights), store::read_actb(opt.train), cfg);

  CsvWriter profile({"basis", "index", "magnitude"});
  for (const std::string& name : opt.bases) {
    const BasisKind kind = parse_basis_kind(name);
    const Vec prof = alignment_profile(cal.fac, profile_basis(kind, cal.fac, cal.subset));
    for (std::size_t i = 0; i < prof.size(); ++i) profile.add_row({to_string(kind), std::to_string(i), csv_field(prof[i])});
    if (prof.empty()) {
      out << to_string(kind) << ": empty basis\n";
    } else {
      const auto peak = static_cast<std::size_t>(std::max_element(prof.begin(), prof.end()) - prof.begin());
      out << to_string(kind) << ": peak index " << peak << " of " << prof.size() << ", magnitude "
          << format_shortest(prof[peak]) << "\n";
    }
  }
  store::write_text_atomic(opt.out, profile.str());

  const NormBalance balance = norm_balance(cal.fac, cal.subset);
  const std::size_t chosen = select_k(cal.fac, cal.subset);
  CsvWriter curve({"k", "mean_dec_norm", "mean_insig_norm", "signed_gap", "abs_gap"});
  for (std::size_t k = 0; k < balance.signed_gap.size(); ++k) {
    curve.add_row({std::to_string(k), csv_field(balance.mean_dec_norm[k]), csv_field(balance.mean_insig_norm[k]),
                   csv_field(balance.signed_gap[k]), csv_field(std::abs(balance.signed_gap[k]))});
  }
  const Path curve_path = opt.curve_out ? *opt.curve_out : default_curve_path(opt.out);
  store::write_text_atomic(curve_path, curve.str());
  out << "rank=" << cal.fac.rank << " selected k=" << chosen << " signed gap sign changes "
      << sign_changes(balance.signed_gap) << "\n";
  out << "wrote " << opt.out.string() << " and " << curve_path.string() << "\n";
}

void cmd_ablate(const AblateOptions& opt, std::ostream& out, std::ostream&) {
  const store::RunConfig cfg = load_config(opt.config);
  std::vector<double> lambdas = cfg.lambda ? std::vector<double>{*cfg.lambda} : kDefaultLambdaGrid;
  std::vector<double> prunes = cfg.shaping_p ? std::vector<double>{*cfg.shaping_p} : kDefaultPruneGrid;
  for (const std::string& text : opt.grids) {
    GridSpec g = parse_grid(text);
    if (g.name == "lambda") lambdas = std::move(g.values);
    else if (g.name == "p") prunes = std::move(g.values);
    else throw ConfigError("ablate: unknown grid '" + g.name + "' (expected lambda or p)");
  }
  if (!uses_prune_fraction(cfg.shaping_method)) prunes = {cfg.shaping_p.value_or(0.85)};
  std::vector<BasisKind> bases;
  for (const auto& b : opt.bases) bases.push_back(parse_basis_kind(b));
  std::vector<Component> components;
  for (const auto& c : opt.s_arrow_components) components.push_back(parse_component(c));
  if (components.empty()) components.push_back(cfg.s_arrow_component);

  const ActivationBank train = store::read_actb(opt.train);
  const Calibration cal = prepare(store::read_wgt(opt.weights), train, cfg);
  const ActivationBank val_id = store::read_actb(opt.val_id);
  const ActivationBank val_ood = store::read_actb(opt.val_ood);
  check_dim(val_id, cal.head, "validation ID bank");
  check_dim(val_ood, cal.head, "validation OOD bank");

  CsvWriter csv({"basis", "s_arrow_component", "p", "lambda", "decisive_dims", "auroc_insignificant",
                 "fpr_insignificant", "auroc_decisive", "fpr_decisive", "auroc_actsub", "fpr_actsub"});
  std::size_t cells = 0;
  for (const BasisKind basis : bases) {
    store::RunConfig cell = cfg;
    cell.basis = basis;
    const SubspaceSplit split = build_basis(basis_strategy(cell), cal.head, cal.fac, cal.subset);
    for (const Component component : components) {
      cell.s_arrow_component = component;
      ScoreConfig sc = score_config(cell);
      Detector det = build_detector(cal, cell, split, sc, train.size());
      const Vec ins_id = det.score_batch(ScoreMethod::kInsignificant, val_id.features()).scores;
      const Vec ins_ood = det.score_batch(ScoreMethod::kInsignificant, val_ood.features()).scores;
      const EvalResult r_ins = evaluate(ins_id, ins_ood);
      for (const double p : prunes) {
        det.config().shaping.prune_fraction = p;
        det.config().validate();
        ComponentScores id{ins_id, det.score_batch(ScoreMethod::kDecisive, val_id.features()).scores};
        ComponentScores ood{ins_ood, det.score_batch(ScoreMethod::kDecisive, val_ood.features()).scores};
        const EvalResult r_dec = evaluate(id.decisive, ood.decisive);
        for (const double lambda : lambdas) {
          const EvalResult r_fused = evaluate(id.fused(lambda), ood.fused(lambda));
          csv.add_row({to_string(basis), to_string(component), csv_field(p), csv_field(lambda), std::to_string(split.k),
                       csv_field(r_ins.auroc), csv_field(r_ins.fpr_at_tpr), csv_field(r_dec.auroc),
                       csv_field(r_dec.fpr_at_tpr), csv_field(r_fused.auroc), csv_field(r_fused.fpr_at_tpr)});
          ++cells;
        }
      }
    }
  }
  store::write_text_atomic(opt.out, csv.str());
  out << "ablation: " << cells << " cells -> " << opt.out.string() << "\n";
}

void cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream&) {
  const SynthSpec spec = store::read_synth_spec(opt.spec);
  const World world = gen_world(spec);
  std::filesystem::create_directories(opt.out_dir);
  store::write_wgt(opt.out_dir / "head.wgt", world.head);
  store::write_actb(opt.out_dir / "train.actb", world.train);
  store::write_actb(opt.out_dir / "id_test.actb", world.id_test);
  store::write_actb(opt.out_dir / "ood_test.actb", world.ood_test);
  if (world.val_id) store::write_actb(opt.out_dir / "val_id.actb", *world.val_id);
  if (world.val_ood) store::write_actb(opt.out_dir / "val_ood.actb", *world.val_ood);
  store::write_text_atomic(opt.out_dir / "spec.cfg", store::format_synth_spec(spec));

  const HeadFactorization fac = factorize(world.head);
  out << "world: n=" << spec.n << " c=" << spec.c << " shift=" << to_string(spec.shift_mode)
      << " magnitude=" << format_shortest(spec.shift_magnitude) << " seed=" << spec.seed << "\n";
  out << "train=" << world.train.size() << " id_test=" << world.id_test.size() << " ood_test=" << world.ood_test.size();
  if (world.val_id) out << " val=" << world.val_id->size();
  out << "\n";
  out << "head rank=" << fac.rank << " nullspace_dim=" << fac.nullspace_dim << " train accuracy="
      << format_shortest(static_cast<double>(train_accuracy_hits(world.head, world.train)) /
                       static_cast<double>(world.train.size()))
      << "\n";
  out << "wrote " << opt.out_dir.string() << "\n";
}

}  // namespace actsub::cli
