#include <doctest.h>

#include <cmath>

#include "actsub/bank.hpp"
#include "actsub/error.hpp"
#include "actsub/eval.hpp"
#include "actsub/scoring.hpp"
#include "actsub/synth.hpp"
#include "oracles.hpp"

using namespace actsub;
using linalg::Mat;
using linalg::Vec;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n = 32;
  s.c = 4;
  s.nuisance_dim = 8;
  s.n_train = 800;
  s.n_id_test = 300;
  s.n_ood_test = 300;
  s.train_epochs = 100;
  return s;
}

Vec column_means(const ActivationBank& b) {
  Vec m(b.dim(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) m[j] += b.row(i)[j];
  for (double& x : m) x /= static_cast<double>(b.size());
  return m;
}

}  // namespace

TEST_CASE("spec validation") {
  SynthSpec s = small_spec();
  s.c = s.n;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = small_spec();
  s.nuisance_dim = s.n - s.c + 1;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = small_spec();
  s.c = 1;
  CHECK_THROWS_AS(gen_world(s), InvalidInput);
  for (auto m : {ShiftMode::kDecisive, ShiftMode::kInsignificant, ShiftMode::kMixed})
    CHECK(parse_shift_mode(to_string(m)) == m);
}

TEST_CASE("worlds are deterministic and non-negative") {
  const SynthSpec s = small_spec();
  const World a = gen_world(s), b = gen_world(s);
  CHECK(a.head.w == b.head.w);
  CHECK(a.train.features() == b.train.features());
  CHECK(a.ood_test.features() == b.ood_test.features());
  CHECK(*a.train.labels() == *b.train.labels());
  for (double x : a.train.features().data()) CHECK(x >= 0.0);
  CHECK(a.train.size() == s.n_train);
  CHECK(!a.val_id.has_value());
  SynthSpec with_val = s;
  with_val.n_val = 50;
  const World v = gen_world(with_val);
  REQUIRE(v.val_id.has_value());
  CHECK(v.val_id->size() == 50);
  CHECK(v.val_ood->size() == 50);
}

TEST_CASE("null shift gives chance-level AUROC") {
  SynthSpec s;
  s.n_id_test = 2000;
  s.n_ood_test = 2000;
  s.shift_magnitude = 0.0;
  s.seed = 3;
  const World w = gen_world(s);
  const HeadFactorization f = factorize(w.head);
  const ActivationBank sub = subsample(w.train, 0.1, 0);
  const SubspaceSplit sp = split(f, select_k(f, sub));
  const Detector det(w.head, f, sp, project_bank(sub, sp), ScoreConfig{});
  for (auto m : {ScoreMethod::kEnergy, ScoreMethod::kMsp, ScoreMethod::kDecisive, ScoreMethod::kInsignificant,
                 ScoreMethod::kActsub}) {
    const double a = auroc(det.score_batch(m, w.id_test.features()).scores,
                           det.score_batch(m, w.ood_test.features()).scores);
    CHECK(std::abs(a - 0.5) <= 0.05);
  }
}

TEST_CASE("insignificant shift moves the mean inside the nuisance block") {
  SynthSpec s = small_spec();
  s.shift_mode = ShiftMode::kInsignificant;
  s.shift_magnitude = 12.0;
  s.n_id_test = 4000;
  s.n_ood_test = 4000;
  s.train_epochs = 0;
  const World w = gen_world(s);
  const Vec mi = column_means(w.id_test), mo = column_means(w.ood_test);
  double inside = 0.0, outside = 0.0;
  for (std::size_t j = 0; j < s.n; ++j) {
    const double d = (mo[j] - mi[j]) * (mo[j] - mi[j]);
    (j >= s.c && j < s.c + s.nuisance_dim ? inside : outside) += d;
  }
  CHECK(std::sqrt(inside) > 3.0);
  CHECK(std::sqrt(outside) < 0.1 * std::sqrt(inside));
}

TEST_CASE("train_head") {
  // separable 2-class toy problem
  const ActivationBank toy(Mat::from_rows({{2, 0}, {3, 0.5}, {0, 2}, {0.5, 3}}));
  const std::vector<std::uint32_t> labels{0, 0, 1, 1};
  TrainOptions opt;
  opt.epochs = 200;
  const TrainResult r = train_head_with_history(toy, labels, 2, opt);
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec l = r.head.logits(toy.row(i), false);
    CHECK((l[1] > l[0]) == (labels[i] == 1));
  }
  for (std::size_t e = 1; e < r.loss_history.size(); ++e) CHECK(r.loss_history[e] <= r.loss_history[e - 1]);

  opt.epochs = 0;
  opt.seed = 5;
  const WeightHead init = train_head(toy, labels, 2, opt);
  opt.epochs = 1;
  CHECK(train_head(toy, labels, 2, opt).w != init.w);
  opt.epochs = 0;
  CHECK(train_head(toy, labels, 2, opt).w == init.w);
  CHECK_THROWS_AS(train_head(toy, std::vector<std::uint32_t>{0, 0, 1, 2}, 2, opt), InvalidInput);
}

TEST_CASE("random_head") {
  const WeightHead h = random_head(3, 5, 9);
  CHECK(h.w.rows() == 3);
  CHECK(h.w == random_head(3, 5, 9).w);
  CHECK(h.w != random_head(3, 5, 10).w);
}
