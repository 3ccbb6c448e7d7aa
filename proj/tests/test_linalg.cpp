#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "actsub/error.hpp"
#include "actsub/linalg.hpp"
#include "oracles.hpp"

using namespace actsub;
using namespace actsub::linalg;

namespace {

void check_svd(const Mat& m, const SvdResult& f, double tol = 1e-9) {
  const std::size_t r = std::min(m.rows(), m.cols());
  REQUIRE(f.sigma.size() == r);
  REQUIRE(f.u.rows() == m.rows());
  REQUIRE(f.u.cols() == r);
  REQUIRE(f.vt.rows() == r);
  REQUIRE(f.vt.cols() == m.cols());
  for (std::size_t i = 0; i < r; ++i) {
    CHECK(f.sigma[i] >= 0.0);
    if (i) CHECK(f.sigma[i] <= f.sigma[i - 1]);
  }
  Mat us = f.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < r; ++j) us(i, j) *= f.sigma[j];
  const Mat back = oracle::mul(us, f.vt);
  double err = 0.0;
  for (std::size_t i = 0; i < m.data().size(); ++i) err += std::pow(back.data()[i] - m.data()[i], 2);
  CHECK(std::sqrt(err) <= tol * std::max(1.0, frobenius_norm(m)));
  const Mat utu = oracle::mul(oracle::transposed(f.u), f.u);
  CHECK(oracle::max_abs_diff(utu, Mat::identity(r)) <= tol);
  const Mat vvt = oracle::mul(f.vt, oracle::transposed(f.vt));
  CHECK(oracle::max_abs_diff(vvt, Mat::identity(r)) <= tol);
}

}  // namespace

TEST_CASE("svd of diag(3,2)") {
  const SvdResult f = svd(Mat::from_rows({{3, 0}, {0, 2}}));
  CHECK(f.sigma == Vec{3, 2});
  CHECK(f.u == Mat::identity(2));
  CHECK(f.vt == Mat::identity(2));
}

TEST_CASE("svd of a permutation reconstructs") {
  const Mat m = Mat::from_rows({{0, 1}, {1, 0}});
  const SvdResult f = svd(m);
  CHECK(f.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.sigma[1] == doctest::Approx(1.0).epsilon(1e-12));
  check_svd(m, f, 1e-12);
}

TEST_CASE("svd of [[1,1,0],[0,1,1]]") {
  // W W^T = [[2,1],[1,2]]: lambda^2 - 4 lambda + 3 = 0, roots 3 and 1.
  const double tr = 4.0, det = 3.0;
  const double l1 = (tr + std::sqrt(tr * tr - 4 * det)) / 2, l2 = (tr - std::sqrt(tr * tr - 4 * det)) / 2;
  const Mat m = Mat::from_rows({{1, 1, 0}, {0, 1, 1}});
  const SvdResult f = svd(m);
  CHECK(f.sigma[0] == doctest::Approx(std::sqrt(l1)).epsilon(1e-12));
  CHECK(f.sigma[1] == doctest::Approx(std::sqrt(l2)).epsilon(1e-12));
  check_svd(m, f);
}

TEST_CASE("svd sign convention: largest entry of each right vector is positive") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const SvdResult f = svd(oracle::random_mat(rng, 5, 7));
    for (std::size_t i = 0; i < f.vt.rows(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < f.vt.cols(); ++j)
        if (std::abs(f.vt(i, j)) > std::abs(f.vt(i, best))) best = j;
      CHECK(f.vt(i, best) > 0.0);
    }
  }
}

TEST_CASE("svd random round trip, tall and wide") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 60; ++t) {
    const std::size_t r = oracle::uniform(rng, 1, 40), c = oracle::uniform(rng, 1, 40);
    const Mat m = oracle::random_mat(rng, r, c, t % 3 == 0 ? 100.0 : 1.0);
    check_svd(m, svd(m));
  }
}

TEST_CASE("svd of rank-deficient matrix reports the numerical rank") {
  std::mt19937_64 rng(3);
  const Mat a = oracle::random_mat(rng, 6, 2), b = oracle::random_mat(rng, 2, 9);
  const Mat m = oracle::mul(a, b);
  const SvdResult f = svd(m);
  check_svd(m, f);
  CHECK(f.rank() == 2);
  CHECK(svd(Mat(3, 4)).rank() == 0);
}

TEST_CASE("svd errors") {
  CHECK_THROWS_AS(svd(Mat()), InvalidInput);
  Mat m = Mat::identity(2);
  m(0, 1) = std::nan("");
  CHECK_THROWS_AS(svd(m), InvalidInput);
}

TEST_CASE("svd is deterministic") {
  std::mt19937_64 rng(5);
  const Mat m = oracle::random_mat(rng, 12, 30);
  const SvdResult a = svd(m), b = svd(m);
  CHECK(a.u == b.u);
  CHECK(a.sigma == b.sigma);
  CHECK(a.vt == b.vt);
}

TEST_CASE("pinv_apply examples") {
  CHECK(pinv_apply(svd(Mat::identity(2)), Vec{1, 1}) == Vec{1, 1});
  const Vec d = pinv_apply(svd(Mat::from_rows({{2, 0}, {0, 4}})), Vec{1, 1});
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(0.25).epsilon(1e-15));

  const Mat w = Mat::from_rows({{1, 0, 0}, {0, 1, 0}});
  const Vec x = pinv_apply(svd(w), Vec{1, 1});
  CHECK(oracle::max_abs_diff(oracle::mul(w, x), Vec{1, 1}) < 1e-14);
  CHECK(std::abs(x[2]) < 1e-14);  // orthogonal to the nullspace e3
  CHECK_THROWS_AS(pinv_apply(svd(w), Vec{1, 1, 1}), InvalidInput);
}

TEST_CASE("pinv_apply recovers the row-space component") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const std::size_t c = oracle::uniform(rng, 1, 12), n = oracle::uniform(rng, 1, 20);
    const Mat w = oracle::random_mat(rng, c, n);
    const Vec x = oracle::random_vec(rng, n);
    const Vec wx = oracle::mul(w, x);
    const Vec back = pinv_apply(svd(w), wx);
    CHECK(oracle::max_abs_diff(oracle::mul(w, back), wx) <= 1e-8);
    // and it is the row-space projection of x itself (all of R^n when c >= n)
    const Vec expect = c >= n ? x : oracle::project_onto_rows(w, x);
    CHECK(oracle::max_abs_diff(back, expect) <= 1e-8 * std::max(1.0, norm(x)) * 10);
  }
}

TEST_CASE("percentile nearest rank") {
  CHECK(percentile(Vec{1, 2, 3, 4}, 0.5) == 2);
  CHECK(percentile(Vec{5}, 0.9) == 5);
  CHECK(percentile(Vec{3, 1, 2}, 1.0) == 3);
  CHECK(percentile(Vec{3, 1, 2}, 0.0) == 1);
  CHECK_THROWS_AS(percentile(Vec{}, 0.5), InvalidInput);

  Vec hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = 100 - i;
  CHECK(percentile(hundred, 0.9) == 90);
  CHECK(percentile(hundred, 0.7) == 70);  // 0.7 * 100 is 70.00000000000001 in binary

  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const Vec v = oracle::random_vec(rng, oracle::uniform(rng, 1, 50));
    const double p = std::uniform_real_distribution<double>(0, 1)(rng);
    CHECK(percentile(v, p) == oracle::percentile(v, p));
  }
}

TEST_CASE("kmeans on separated pairs") {
  const Mat pts = Mat::from_rows({{0, 0}, {0, 1}, {10, 10}, {10, 11}});
  const Mat c = kmeans(pts, 2, 1, 100);
  std::set<std::pair<double, double>> got{{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}};
  CHECK(got == std::set<std::pair<double, double>>{{0, 0.5}, {10, 10.5}});
}

TEST_CASE("kmeans with k = rows returns the points") {
  const Mat pts = Mat::from_rows({{1, 2}, {3, 4}, {-1, 0}, {7, 7}});
  const Mat c = kmeans(pts, 4, 3, 100);
  std::multiset<std::pair<double, double>> got, want;
  for (std::size_t i = 0; i < 4; ++i) {
    got.insert({c(i, 0), c(i, 1)});
    want.insert({pts(i, 0), pts(i, 1)});
  }
  CHECK(got == want);
}

TEST_CASE("kmeans 1-D matches exhaustive assignment") {
  const Vec xs{0, 1, 10, 11};
  // enumerate every non-trivial 2-colouring and keep the lowest SSE
  double best = INFINITY;
  std::set<double> best_centroids;
  for (unsigned mask = 1; mask < 15; ++mask) {
    double s[2] = {0, 0}, n[2] = {0, 0};
    for (unsigned i = 0; i < 4; ++i) {
      s[(mask >> i) & 1] += xs[i];
      n[(mask >> i) & 1] += 1;
    }
    const double m0 = s[0] / n[0], m1 = s[1] / n[1];
    double sse = 0;
    for (unsigned i = 0; i < 4; ++i) sse += std::pow(xs[i] - (((mask >> i) & 1) ? m1 : m0), 2);
    if (sse < best) best = sse, best_centroids = {m0, m1};
  }
  const Mat c = kmeans(Mat(4, 1, xs), 2, 0, 100);
  CHECK(std::set<double>{c(0, 0), c(1, 0)} == best_centroids);
  CHECK(best_centroids == std::set<double>{0.5, 10.5});
}

TEST_CASE("kmeans errors and determinism") {
  const Mat pts = Mat::from_rows({{0}, {1}});
  CHECK_THROWS_AS(kmeans(pts, 3, 0, 10), InvalidInput);
  std::mt19937_64 rng(17);
  const Mat big = oracle::random_mat(rng, 200, 5);
  CHECK(kmeans(big, 7, 42, 50) == kmeans(big, 7, 42, 50));
}

TEST_CASE("kmeans with duplicate points") {
  const Mat pts = Mat::from_rows({{1, 1}, {1, 1}, {1, 1}, {2, 2}});
  const Mat c = kmeans(pts, 3, 0, 20);
  CHECK(c.rows() == 3);
  CHECK(all_finite(c.data()));
}

TEST_CASE("orthonormal completion spans the complement") {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = oracle::uniform(rng, 2, 15), k = oracle::uniform(rng, 0, n);
    const Mat basis = k ? svd(oracle::random_mat(rng, k, n)).vt : Mat(0, n);
    const Mat comp = orthonormal_completion(basis, n);
    REQUIRE(comp.rows() == n - basis.rows());
    Mat all = basis;
    for (std::size_t i = 0; i < comp.rows(); ++i) all.append_row(comp.row(i));
    CHECK(row_orthonormality_error(all) < 1e-10);
  }
}
