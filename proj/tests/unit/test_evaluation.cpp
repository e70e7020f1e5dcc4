#include <doctest.h>

#include "knnxkde/errors.hpp"
#include "knnxkde/evaluation.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace knnxkde;

namespace {

// Pairs of identical rows; in each pair the second copy misses column 1.
PreparedTrial twin_trial(std::size_t pairs) {
  std::vector<double> truth, amputed;
  std::vector<unsigned char> mask;
  for (std::size_t p = 0; p < pairs; ++p) {
    const double a = static_cast<double>(p) / static_cast<double>(pairs - 1);
    const double b = 0.5 + 0.5 * std::sin(7.0 * a);
    truth.insert(truth.end(), {a, b, a, b});
    amputed.insert(amputed.end(), {a, b, a, kMissing});
    mask.insert(mask.end(), {1, 1, 1, 0});
  }
  const std::size_t n = 2 * pairs;
  return {DataMatrix(n, 2, truth), DataMatrix(n, 2, amputed), Mask{n, 2, mask}, {{0.0, 0.0}, {1.0, 1.0}}};
}

} // namespace

TEST_SUITE("evaluation") {

TEST_CASE("nrmse examples") {
  const DataMatrix truth(2, 2, {0.4, 0.0, 0.2, 0.5});
  const Mask one{2, 2, {0, 1, 1, 1}};
  CHECK(nrmse(truth, truth, one) == 0.0);
  const DataMatrix off(2, 2, {0.1, 0.0, 0.2, 0.5});
  CHECK(nrmse(truth, off, one) == doctest::Approx(0.3));

  const Mask two{2, 2, {0, 1, 1, 0}};
  const DataMatrix both(2, 2, {0.1, 0.0, 0.2, 0.1});
  CHECK(nrmse(truth, both, two) == doctest::Approx(std::sqrt((0.09 + 0.16) / 2.0)).epsilon(1e-12));
  CHECK(nrmse(truth, both, two) == doctest::Approx(0.3536).epsilon(1e-4));

  CHECK_THROWS_AS(nrmse(truth, truth, Mask{2, 2, {1, 1, 1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(nrmse(truth, DataMatrix(1, 2, {0, 0}), one), DimensionError);
}

TEST_CASE("nrmse is invariant under row permutation") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  const std::size_t n = 50;
  std::vector<double> t(n * 3), p(n * 3);
  std::vector<unsigned char> m(n * 3);
  for (std::size_t k = 0; k < n * 3; ++k) {
    t[k] = u(rng);
    p[k] = u(rng);
    m[k] = u(rng) < 0.3 ? 0 : 1;
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> t2(n * 3), p2(n * 3);
  std::vector<unsigned char> m2(n * 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      t2[3 * i + j] = t[3 * perm[i] + j];
      p2[3 * i + j] = p[3 * perm[i] + j];
      m2[3 * i + j] = m[3 * perm[i] + j];
    }
  CHECK(nrmse(DataMatrix(n, 3, t), DataMatrix(n, 3, p), Mask{n, 3, m}) ==
        doctest::Approx(nrmse(DataMatrix(n, 3, t2), DataMatrix(n, 3, p2), Mask{n, 3, m2})).epsilon(1e-14));
}

TEST_CASE("histogram bins") {
  CHECK(histogram_bin(-0.1) == std::optional<std::size_t>(0));
  CHECK(histogram_bin(1.0999) == std::optional<std::size_t>(119));
  CHECK_FALSE(histogram_bin(1.1).has_value());
  CHECK_FALSE(histogram_bin(-0.2).has_value());
  CHECK(histogram_bin(0.505) == std::optional<std::size_t>(60));
}

TEST_CASE("histogram log-likelihood examples") {
  const std::vector<double> concentrated(10000, 0.505);
  CHECK(loglik_histogram(concentrated, 0.5055) == doctest::Approx(std::log(100.0)).epsilon(1e-9));
  CHECK(loglik_histogram(concentrated, 0.1) == doctest::Approx(std::log(0.01)).epsilon(1e-9));

  std::vector<double> uniform(10000);
  for (std::size_t i = 0; i < uniform.size(); ++i) uniform[i] = (static_cast<double>(i) + 0.5) / 1e4;
  for (double truth : {0.005, 0.333, 0.5, 0.9})
    CHECK(std::abs(loglik_histogram(uniform, truth)) < 0.05);

  // Truth beyond the grid lands in the edge bin.
  const std::vector<double> edge(1000, 1.095);
  CHECK(loglik_histogram(edge, 7.0) == doctest::Approx(std::log(100.0)).epsilon(1e-9));
  const std::vector<double> low(1000, -0.095);
  CHECK(loglik_histogram(low, -3.0) == doctest::Approx(std::log(100.0)).epsilon(1e-9));
  // Samples off the grid still count in n.
  std::vector<double> half(1000, 0.505);
  std::fill(half.begin(), half.begin() + 500, 5.0);
  CHECK(loglik_histogram(half, 0.505) == doctest::Approx(std::log(50.0)).epsilon(1e-9));
  CHECK_THROWS(loglik_histogram(std::vector<double>{}, 0.5));
}

TEST_CASE("Gaussian log-likelihood examples") {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(loglik_gaussian({0, 0, 0.7, 1.0}, 0.7) == doctest::Approx(-half_log_2pi).epsilon(1e-14));
  CHECK(loglik_gaussian({0, 0, 0.7, 1.0}, 0.7) == doctest::Approx(-0.9189).epsilon(1e-4));
  CHECK(loglik_gaussian({0, 0, 1.0, 0.3}, 1.3) == doctest::Approx(-half_log_2pi - 0.5 - std::log(0.3)).epsilon(1e-14));
  const double oracle = -half_log_2pi - std::log(0.1) - 0.5 * 9.0;
  CHECK(loglik_gaussian({0, 0, 0.0, 0.1}, 0.3) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(oracle == doctest::Approx(-3.11635).epsilon(1e-5));
  // A zero spread is floored, not infinite.
  CHECK(std::isfinite(loglik_gaussian({0, 0, 0.5, 0.0}, 0.5)));
}

TEST_CASE("analytic and histogram likelihoods agree on smooth cells") {
  CellDistribution dist;
  dist.bandwidth = 0.05;
  for (int j = 0; j < 20; ++j) dist.donor_values.push_back(0.3 + 0.02 * j);
  dist.weights.assign(20, 0.05);
  const RowDistribution row{{0}, dist.donor_values, dist.weights, dist.bandwidth};
  Rng rng(3);
  const auto samples = sample_joint(row, 100000, rng);
  // Interior truths: on the steep shoulders the 0.01 bin average drifts from the point density.
  for (double truth : {0.35, 0.4, 0.45, 0.5, 0.55, 0.62}) {
    CHECK(std::abs(loglik_analytic(dist, truth) - loglik_histogram(samples, truth)) < 0.15);
  }
  CHECK(loglik_analytic(CellDistribution{{0.4}, {1.0}, 0.03}, 0.4) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * 0.03 * 0.03)).epsilon(1e-12));
}

TEST_CASE("mode counter") {
  Rng rng(4);
  std::normal_distribution<double> a(0.2, 0.03), b(0.8, 0.03);
  std::bernoulli_distribution pick(0.5), rare(0.05);
  std::vector<double> two, one, skewed;
  for (int i = 0; i < 20000; ++i) {
    two.push_back(pick(rng) ? a(rng) : b(rng));
    one.push_back(a(rng));
    skewed.push_back(rare(rng) ? b(rng) : a(rng));
  }
  CHECK(count_modes(two) == 2);
  CHECK(count_modes(one) == 1);
  CHECK(count_modes(skewed) == 1);
  CHECK(count_modes(skewed, 0.01) == 2);
  CHECK(count_modes(std::vector<double>{5.0}) == 0);
  // A flat top counts once.
  CHECK(count_modes(std::vector<double>{0.105, 0.115, 0.125}) == 1);
}

TEST_CASE("method names") {
  CHECK(parse_method("knnxkde") == MethodId::KnnXKde);
  CHECK(parse_method("softimpute") == MethodId::SoftImpute);
  CHECK_THROWS_AS(parse_method("gain"), NotImplemented);
  CHECK_THROWS_AS(parse_method("missforest"), NotImplemented);
  CHECK_THROWS_AS(parse_method("xgboost"), std::invalid_argument);
  CHECK(has_loglik(MethodId::KnnXKde));
  CHECK(has_loglik(MethodId::Knn));
  CHECK(has_loglik(MethodId::Mice));
  CHECK(has_loglik(MethodId::Mean));
  CHECK_FALSE(has_loglik(MethodId::SoftImpute));
  CHECK_FALSE(has_loglik(MethodId::Median));
  CHECK(default_grid(MethodId::KnnXKde) == std::vector<double>{10, 25, 50, 100, 250, 500, 1000});
  CHECK(default_grid(MethodId::Knn) == std::vector<double>{1, 2, 5, 10, 20, 50, 100});
  CHECK(default_grid(MethodId::SoftImpute) == std::vector<double>{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0});
}

TEST_CASE("select_best tie rule") {
  CHECK(select_best(std::vector<double>{0.3}) == 0);
  CHECK(select_best(std::vector<double>{0.5, 0.5 - 1e-13}) == 0);
  CHECK(select_best(std::vector<double>{0.5, 0.5 + 1e-13}) == 0);
  CHECK(select_best(std::vector<double>{0.5, 0.4, 0.4}) == 1);
  CHECK(select_best(std::vector<double>{INFINITY, 0.7}) == 1);
  CHECK(select_best(std::vector<double>{NAN, 0.7}) == 1);
}

TEST_CASE("grid search picks the exact point and records a failing one") {
  const std::vector<PreparedTrial> trials{twin_trial(30), twin_trial(40)};
  const std::vector<double> grid{0, 3, 1};
  MethodSettings settings;
  const auto r = grid_search(MethodId::Knn, grid, trials, settings, 5);
  REQUIRE(r.table.size() == 3);
  CHECK(r.table[0].failed);
  CHECK_FALSE(r.table[0].error.empty());
  CHECK(std::isinf(r.table[0].mean_nrmse));
  CHECK(r.table[1].mean_nrmse > 0.0);
  CHECK(r.table[2].mean_nrmse == 0.0);
  CHECK(r.best_index == 2);
  CHECK(r.best_value == 1.0);
  CHECK(r.table[2].nrmse.size() == 2);

  const auto single = grid_search(MethodId::Knn, std::vector<double>{3}, trials, settings, 5);
  CHECK(single.best_index == 0);
  const auto threaded = grid_search(MethodId::Knn, grid, trials, settings, 5, 3);
  CHECK(threaded.table[1].nrmse == r.table[1].nrmse);
}

TEST_CASE("prepare_trial and run_method") {
  Rng gen(6);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<double> v(200 * 2);
  for (auto& e : v) e = u(gen);
  const DataMatrix complete(200, 2, v);
  const auto trial = prepare_trial(complete, {Mechanism::Mcar, 0.2, 1, std::nullopt}, 9);
  CHECK(trial.mask.missing_count() > 0);
  CHECK(trial.amputed_norm.missing_count() == trial.mask.missing_count());
  for (std::size_t i = 0; i < 200; ++i)
    if (trial.mask.is_observed(i, 1)) CHECK(trial.truth_norm(i, 1) == trial.amputed_norm(i, 1));

  MethodSettings settings;
  settings.n_draws = 500;
  for (auto m : {MethodId::KnnXKde, MethodId::Knn, MethodId::Mice, MethodId::SoftImpute, MethodId::Mean,
                 MethodId::Median}) {
    const double hyper = m == MethodId::KnnXKde ? 50.0 : m == MethodId::Knn ? 5.0 : 1.0;
    const auto run = run_method(m, hyper, trial, settings, 3, true);
    CHECK(run.imputed.complete());
    CHECK(run.mean_loglik.has_value() == has_loglik(m));
    if (run.mean_loglik) CHECK(std::isfinite(*run.mean_loglik));
    CHECK(nrmse(trial.truth_norm, run.imputed, trial.mask) >= 0.0);
    CHECK_FALSE(run_method(m, hyper, trial, settings, 3, false).mean_loglik.has_value());
  }
}

TEST_CASE("rank_methods examples") {
  // Geyser Full MCAR 20 % NRMSE from the published comparison.
  const std::vector<MethodScore> geyser{{"geyser", "knnxkde", 10.78}, {"geyser", "knn", 10.77}, {"geyser", "mice", 12.74}};
  const auto g = rank_methods(geyser);
  REQUIRE(g.entries.size() == 3);
  CHECK(g.entries[0].method == "knnxkde");
  CHECK(g.entries[0].mean_rank == 2.0);
  CHECK(g.entries[1].mean_rank == 1.0);
  CHECK(g.entries[2].mean_rank == 3.0);

  const std::vector<MethodScore> tied{{"d", "a", 1.0}, {"d", "b", 1.0}, {"d", "c", 1.0}, {"d", "e", 1.0}};
  for (const auto& e : rank_methods(tied).entries) CHECK(e.mean_rank == 2.5);

  const std::vector<MethodScore> two{{"d1", "a", 0.1}, {"d1", "b", 0.2}, {"d1", "c", 0.3},
                                     {"d2", "a", 0.9}, {"d2", "b", 0.2}, {"d2", "c", 0.3}};
  const auto t = rank_methods(two);
  CHECK(t.entries[0].mean_rank == 2.0);
  CHECK(t.entries[0].std_rank == 1.0);
  double sum = 0.0;
  for (const auto& e : t.entries) sum += e.mean_rank;
  CHECK(sum == 6.0);

  // Higher log-likelihood is better.
  const auto ll = rank_methods(geyser, false);
  CHECK(ll.entries[2].mean_rank == 1.0);

  const std::vector<MethodScore> gap{{"d1", "a", 0.1}, {"d1", "b", std::nullopt}, {"d2", "a", 0.3}, {"d2", "b", 0.2}};
  const auto r = rank_methods(gap);
  CHECK(r.notes.size() == 1);
  CHECK(r.entries[1].datasets == 1);
  CHECK(r.entries[0].datasets == 2);
}

} // TEST_SUITE
