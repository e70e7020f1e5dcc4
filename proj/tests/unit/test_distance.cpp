#include <doctest.h>

#include "knnxkde/distance.hpp"
#include "knnxkde/errors.hpp"

#include <cmath>
#include <random>

using namespace knnxkde;

namespace {
const double NaN = kMissing;
const std::vector<double> r1{-1, 6, 4, NaN, 8};
const std::vector<double> r2{NaN, NaN, 3, NaN, 4};
const std::vector<double> r3{-1, 5, 3, -2, NaN};
const std::vector<double> sigma15(5, 1.5);
} // namespace

TEST_SUITE("distance") {

TEST_CASE("worked example, NaN-Euclidean") {
  const auto d13 = nan_euclidean(r1, r3);
  CHECK(d13.n_common == 3);
  CHECK(d13.value == doctest::Approx(std::sqrt(5.0 / 3.0 * 2.0)).epsilon(1e-12));
  CHECK(d13.value == doctest::Approx(1.826).epsilon(1e-3));
  const auto d23 = nan_euclidean(r2, r3);
  CHECK(d23.n_common == 1);
  CHECK(d23.value == 0.0);
}

TEST_CASE("worked example, NaN-std-Euclidean") {
  CHECK(nan_std_euclidean(r1, r3, sigma15).value == doctest::Approx(std::sqrt(2.0 + 2 * 2.25)).epsilon(1e-12));
  CHECK(nan_std_euclidean(r1, r3, sigma15).value == doctest::Approx(2.55).epsilon(1e-3));
  CHECK(nan_std_euclidean(r2, r3, sigma15).value == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("identical complete rows are at distance zero") {
  const std::vector<double> a{0.1, 0.2, 0.3};
  CHECK(nan_euclidean(a, a).value == 0.0);
  CHECK(nan_std_euclidean(a, a, std::vector<double>{5, 5, 5}).value == 0.0);
}

TEST_CASE("no common feature gives infinity") {
  const std::vector<double> a{1, NaN}, b{NaN, 2};
  const auto d = nan_euclidean(a, b);
  CHECK(std::isinf(d.value));
  CHECK(d.n_common == 0);
  CHECK(nan_std_euclidean(a, b, std::vector<double>{1, 2}).value == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("length mismatch is rejected") {
  const std::vector<double> a{1, 2}, b{1, 2, 3};
  CHECK_THROWS_AS(nan_euclidean(a, b), DimensionError);
  CHECK_THROWS_AS(nan_std_euclidean(a, a, b), DimensionError);
}

TEST_CASE("symmetry, complete-row agreement and the sparsity penalty") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  std::bernoulli_distribution miss(0.3);
  const std::vector<double> sigma{0.2, 0.3, 0.1, 0.25, 0.4, 0.15};
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(6), b(6);
    for (std::size_t k = 0; k < 6; ++k) {
      a[k] = miss(rng) ? NaN : z(rng);
      b[k] = miss(rng) ? NaN : z(rng);
    }
    CHECK(nan_euclidean(a, b).value == nan_euclidean(b, a).value);
    CHECK(nan_std_euclidean(a, b, sigma).value == nan_std_euclidean(b, a, sigma).value);

    std::vector<double> ca(6), cb(6);
    for (std::size_t k = 0; k < 6; ++k) {
      ca[k] = z(rng);
      cb[k] = z(rng);
    }
    double plain = 0.0;
    for (std::size_t k = 0; k < 6; ++k) plain += (ca[k] - cb[k]) * (ca[k] - cb[k]);
    plain = std::sqrt(plain);
    CHECK(nan_euclidean(ca, cb).value == plain);
    CHECK(nan_std_euclidean(ca, cb, sigma).value == plain);

    // Hiding one more observed feature of `a` adds sigma_k^2 in place of the
    // squared difference; with a zero difference it strictly grows.
    std::vector<double> same = ca;
    same[2] = cb[2];
    std::vector<double> hidden = same;
    hidden[2] = NaN;
    CHECK(nan_std_euclidean(hidden, cb, sigma).value > nan_std_euclidean(same, cb, sigma).value);
  }
}

TEST_CASE("pairwise matrix matches single pairs for any thread count") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  std::bernoulli_distribution miss(0.25);
  const std::size_t n = 150, d = 3;
  std::vector<double> v(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) v[i * d + k] = (k > 0 && miss(rng)) ? NaN : z(rng);
  const DataMatrix x(n, d, v);
  std::vector<std::size_t> q{0, 5, 77, 149}, c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(i);
  const std::vector<double> sigma{0.5, 0.7, 0.9};
  for (auto metric : {Metric::NanEuclidean, Metric::NanStdEuclidean}) {
    const auto one = pairwise_distances(x, q, c, metric, sigma, 1);
    const auto many = pairwise_distances(x, q, c, metric, sigma, 4);
    CHECK(one == many);
    for (std::size_t a = 0; a < q.size(); ++a)
      for (std::size_t b = 0; b < c.size(); ++b) {
        const double expect = metric == Metric::NanEuclidean ? nan_euclidean(x.row(q[a]), x.row(c[b])).value
                                                             : nan_std_euclidean(x.row(q[a]), x.row(c[b]), sigma).value;
        CHECK(one[a * c.size() + b] == expect);
      }
  }
}

} // TEST_SUITE
