#include <doctest.h>

#include "knnxkde/baselines.hpp"

#include <cmath>
#include <random>

using namespace knnxkde;

namespace {

const double NaN = kMissing;

void check_observed_untouched(const DataMatrix& in, const DataMatrix& out) {
  REQUIRE(out.rows() == in.rows());
  CHECK(out.complete());
  for (std::size_t i = 0; i < in.rows(); ++i)
    for (std::size_t j = 0; j < in.cols(); ++j)
      if (in.observed(i, j)) CHECK(out(i, j) == in(i, j));
}

DataMatrix noisy_matrix(std::uint64_t seed, std::size_t n, double miss_rate) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution miss(miss_rate);
  std::vector<double> v(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = z(rng);
    v[3 * i] = t;
    v[3 * i + 1] = (miss(rng)) ? NaN : 0.8 * t + 0.3 * z(rng);
    v[3 * i + 2] = (miss(rng)) ? NaN : -0.5 * t + 0.3 * z(rng);
  }
  return DataMatrix(n, 3, v);
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("knn with k = 1 copies the nearest eligible neighbour") {
  // Row 0 is closest to row 2 on column 0.
  const DataMatrix x(4, 2, {0.0, NaN, 5.0, 50.0, 0.2, 20.0, -3.0, 30.0});
  const auto r = knn_impute(x, 1);
  CHECK(r.imputed(0, 1) == 20.0);
  REQUIRE(r.models.size() == 1);
  CHECK(r.models[0].sigma == kSigmaFloor);
  CHECK(r.models[0].mu == 20.0);
  check_observed_untouched(x, r.imputed);
}

TEST_CASE("knn with k covering every row gives the column mean of the others") {
  const DataMatrix x(4, 2, {0.0, NaN, 5.0, 50.0, 0.2, 20.0, -3.0, 30.0});
  for (std::size_t k : {3, 100}) {
    const auto r = knn_impute(x, k);
    CHECK(r.imputed(0, 1) == doctest::Approx(100.0 / 3.0));
    const double sd = std::sqrt(((50 - 100.0 / 3) * (50 - 100.0 / 3) + (20 - 100.0 / 3) * (20 - 100.0 / 3) +
                                 (30 - 100.0 / 3) * (30 - 100.0 / 3)) / 3.0);
    CHECK(r.models[0].sigma == doctest::Approx(sd));
  }
}

TEST_CASE("knn with k = N-1 on one missing cell equals mean imputation of the others") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  const std::size_t n = 30;
  std::vector<double> v(n * 3);
  for (auto& e : v) e = z(rng);
  v[3 * 7 + 2] = NaN;
  const DataMatrix x(n, 3, v);
  const auto knn = knn_impute(x, n - 1);
  const auto mean = mean_median_impute(x, ColumnStatistic::Mean);
  CHECK(knn.imputed(7, 2) == doctest::Approx(mean.imputed(7, 2)).epsilon(1e-12));
}

TEST_CASE("knn rejects k = 0 and uses the column mean when no row qualifies") {
  const DataMatrix x(3, 2, {1.0, NaN, NaN, 4.0, NaN, 6.0});
  CHECK_THROWS_AS(knn_impute(x, 0), std::invalid_argument);
  // Row 0 shares no observed feature with rows 1 and 2.
  const auto r = knn_impute(x, 2);
  CHECK(r.imputed(0, 1) == 5.0);
  CHECK(r.imputed(1, 0) == 1.0);
}

TEST_CASE("knn is thread-count independent") {
  const auto x = noisy_matrix(3, 200, 0.3);
  CHECK(knn_impute(x, 5, 1).imputed == knn_impute(x, 5, 4).imputed);
}

TEST_CASE("MICE recovers a noiseless linear relation") {
  std::vector<double> v;
  for (int i = 0; i < 40; ++i) {
    const double xv = 0.1 * i - 1.3;
    v.push_back(xv);
    v.push_back(i % 4 == 1 ? NaN : 2.0 * xv);
  }
  const DataMatrix x(40, 2, v);
  MiceOptions opts;
  opts.add_noise = false;
  opts.seed = 4;
  const auto r = mice_impute(x, opts);
  check_observed_untouched(x, r.imputed);
  for (std::size_t i = 0; i < 40; ++i) CHECK(std::abs(r.imputed(i, 1) - 2.0 * x(i, 0)) <= 1e-6);
  for (const auto& m : r.models) CHECK(m.sigma == kSigmaFloor);
}

TEST_CASE("MICE falls back to a ridge solve on collinear predictors") {
  std::vector<double> v;
  for (int i = 0; i < 30; ++i) {
    const double t = 0.2 * i;
    v.insert(v.end(), {t, 2.0 * t, i % 5 == 0 ? NaN : t + 1.0});
  }
  const DataMatrix x(30, 3, v);
  MiceOptions opts;
  opts.add_noise = false;
  const auto r = mice_impute(x, opts);
  for (std::size_t i = 0; i < 30; i += 5) {
    CHECK(std::isfinite(r.imputed(i, 2)));
    CHECK(std::abs(r.imputed(i, 2) - (x(i, 0) + 1.0)) <= 1e-4);
  }
}

TEST_CASE("MICE with noise: deterministic per seed, spread across repeats") {
  const auto x = noisy_matrix(5, 150, 0.25);
  MiceOptions opts;
  opts.seed = 11;
  const auto a = mice_impute(x, opts);
  const auto b = mice_impute(x, opts);
  CHECK(a.imputed == b.imputed);
  check_observed_untouched(x, a.imputed);
  double max_sigma = 0.0;
  for (const auto& m : a.models) {
    CHECK(m.sigma >= kSigmaFloor);
    max_sigma = std::max(max_sigma, m.sigma);
  }
  CHECK(max_sigma > 0.01);
  opts.n_repeats = 0;
  CHECK_THROWS(mice_impute(x, opts));
}

TEST_CASE("SoftImpute with lambda = 0 completes a rank-1 matrix") {
  const std::vector<double> u{1.0, 2.0, -1.0, 0.5, 3.0}, w{2.0, -1.0, 0.5, 1.5};
  std::vector<double> v;
  for (double a : u)
    for (double b : w) v.push_back(a * b);
  v[2 * 4 + 1] = NaN; // truth: -1 * -1 = 1
  const DataMatrix x(5, 4, v);
  SoftImputeOptions opts;
  opts.lambda = 0.0;
  opts.center = false;
  opts.max_rank = 1;
  opts.max_iters = 20000;
  opts.tol = 1e-20;
  const auto r = soft_impute(x, opts);
  CHECK(r.imputed(2, 1) == doctest::Approx(1.0).epsilon(1e-6));
  check_observed_untouched(x, r.imputed);
}

TEST_CASE("SoftImpute with huge lambda returns column means") {
  const auto x = noisy_matrix(6, 60, 0.3);
  SoftImputeOptions opts;
  opts.lambda = 1e9;
  const auto r = soft_impute(x, opts);
  const auto m = mean_median_impute(x, ColumnStatistic::Mean);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) CHECK(r.imputed(i, j) == doctest::Approx(m.imputed(i, j)).epsilon(1e-12));
  CHECK_THROWS_AS(soft_impute(x, SoftImputeOptions{-1.0}), std::invalid_argument);
}

TEST_CASE("SoftImpute objective never increases") {
  const auto x = noisy_matrix(7, 120, 0.3);
  for (double lambda : {0.0, 0.3, 2.0}) {
    SoftImputeOptions opts;
    opts.lambda = lambda;
    opts.max_iters = 300;
    opts.tol = 1e-14;
    const auto r = soft_impute(x, opts);
    REQUIRE(r.objective.size() >= 2);
    for (std::size_t t = 1; t < r.objective.size(); ++t)
      CHECK(r.objective[t] <= r.objective[t - 1] + 1e-9 * std::max(1.0, std::abs(r.objective[t - 1])));
    check_observed_untouched(x, r.imputed);
  }
}

TEST_CASE("column mean and median") {
  const DataMatrix a(3, 2, {1, 0, NaN, 0, 3, 1});
  const auto ra = mean_median_impute(a, ColumnStatistic::Mean);
  CHECK(ra.imputed(1, 0) == 2.0);
  REQUIRE(ra.models.size() == 1);
  CHECK(ra.models[0].mu == 2.0);
  CHECK(ra.models[0].sigma == 1.0);

  const DataMatrix b(4, 2, {1, 0, NaN, 0, 2, 0, 100, 1});
  const auto rb = mean_median_impute(b, ColumnStatistic::Median);
  CHECK(rb.imputed(1, 0) == 2.0);
  CHECK(rb.models[0].mu == doctest::Approx(103.0 / 3.0));

  const DataMatrix c(5, 2, {1, 0, NaN, 0, 4, 0, 3, 0, 2, 1});
  CHECK(mean_median_impute(c, ColumnStatistic::Median).imputed(1, 0) == 2.5);

  const DataMatrix flat(3, 2, {5, 0, NaN, 1, 5, 2});
  CHECK(mean_median_impute(flat, ColumnStatistic::Mean).models[0].sigma == kSigmaFloor);
}

} // TEST_SUITE
