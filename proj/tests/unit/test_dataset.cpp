#include <doctest.h>

#include "knnxkde/dataset.hpp"
#include "knnxkde/errors.hpp"
#include "knnxkde/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace knnxkde;

namespace {

DataMatrix two_col(std::vector<double> a, std::vector<double> b) {
  std::vector<double> v;
  for (std::size_t i = 0; i < a.size(); ++i) {
    v.push_back(a[i]);
    v.push_back(b[i]);
  }
  return DataMatrix(a.size(), 2, v);
}

std::vector<double> column(const DataMatrix& x, std::size_t j) {
  std::vector<double> out;
  for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(x(i, j));
  return out;
}

// Textbook Pearson, written out independently of the library.
double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("csv with an empty cell sets the mask") {
  const auto x = parse_csv("a,b\n1,2\n,3\n");
  REQUIRE(x.rows() == 2);
  REQUIRE(x.cols() == 2);
  CHECK(x.mask() == std::vector<unsigned char>{1, 1, 0, 1});
  CHECK(x(0, 0) == 1.0);
  CHECK(x(1, 1) == 3.0);
  CHECK(x.column_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("NaN token is missing") {
  const auto x = parse_csv("a,b\n1,NaN\n2,4");
  CHECK(x.mask() == std::vector<unsigned char>{1, 0, 1, 1});
}

TEST_CASE("custom missing tokens") {
  CsvOptions opts;
  opts.missing_tokens = {"?"};
  const auto x = parse_csv("a,b\n1,?\n2,4\n", opts);
  CHECK(x.missing_count() == 1);
  CHECK_THROWS_AS(parse_csv("a,b\n1,NA\n2,4\n", opts), ParseError);
}

TEST_CASE("single column is a dimension error") {
  CHECK_THROWS_AS(parse_csv("a\n1\n2\n"), DimensionError);
}

TEST_CASE("bad cell names its row and column") {
  try {
    parse_csv("a,b\n1,2\n3,abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
}

TEST_CASE("fully missing column is rejected") {
  CHECK_THROWS_AS(parse_csv("a,b\n1,\n2,NA\n"), ParseError);
}

TEST_CASE("ragged row is rejected") { CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), ParseError); }

TEST_CASE("quoted header fields, CRLF and BOM") {
  const auto x = parse_csv("\xEF\xBB\xBF\"first, name\",b\r\n1,2\r\n\r\n3,4\r\n");
  CHECK(x.rows() == 2);
  CHECK(x.column_names()[0] == "first, name");
  CHECK(x(1, 0) == 3.0);
}

TEST_CASE("csv round trip keeps bits and missing cells") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1e3);
  std::vector<double> v(40);
  for (auto& e : v) e = z(rng);
  v[3] = kMissing;
  v[17] = kMissing;
  const DataMatrix x(20, 2, v, {"p", "q"});
  const auto text = to_csv(x);
  CHECK(text.find(",\n") != std::string::npos); // missing serializes as empty
  const auto back = parse_csv(text);
  CHECK(back == x);

  const auto path = std::filesystem::temp_directory_path() / "knnxkde_roundtrip.csv";
  save_csv(x, path);
  CHECK(load_csv(path) == x);
  std::filesystem::remove(path);
}

TEST_CASE("load_csv on a missing file is an io error") {
  CHECK_THROWS_AS(load_csv("/nonexistent/dir/file.csv"), IoError);
}

TEST_CASE("constructor enforces its invariants") {
  CHECK_THROWS_AS(DataMatrix(2, 1, {1.0, 2.0}), DimensionError);
  CHECK_THROWS_AS(DataMatrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS(DataMatrix(1, 2, {1.0, INFINITY}));
  const DataMatrix x(1, 3, {1, 2, 3});
  CHECK(x.column_names() == std::vector<std::string>{"x1", "x2", "x3"});
}

TEST_CASE("normalize maps columns to the unit interval") {
  const auto x = two_col({0, 5, 10}, {7, 7, 7});
  const auto [n, p] = normalize(x);
  CHECK(n(0, 0) == 0.0);
  CHECK(n(1, 0) == 0.5);
  CHECK(n(2, 0) == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(n(i, 1) == 0.0);
  CHECK(p.min[1] == 7.0);
  CHECK(p.max[1] == 7.0);
}

TEST_CASE("normalize preserves missing cells") {
  const auto x = two_col({-1, kMissing, 3}, {1, 2, 3});
  const auto [n, p] = normalize(x);
  CHECK(n(0, 0) == 0.0);
  CHECK(is_missing(n(1, 0)));
  CHECK(n(2, 0) == 1.0);
  CHECK(n.mask() == x.mask());
}

TEST_CASE("denormalize inverts the map") {
  NormalizationParams p{{0.0, 7.0}, {10.0, 7.0}};
  const auto back = denormalize(two_col({0.0, 0.5, 1.0}, {0.3, 0.0, 1.0}), p);
  CHECK(back(0, 0) == 0.0);
  CHECK(back(1, 0) == 5.0);
  CHECK(back(2, 0) == 10.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back(i, 1) == 7.0);
}

TEST_CASE("denormalize rejects a column mismatch") {
  NormalizationParams p{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  CHECK_THROWS_AS(denormalize(two_col({0.0}, {1.0}), p), DimensionError);
}

TEST_CASE("normalize/denormalize round trip within 1e-12 relative") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  std::bernoulli_distribution miss(0.2);
  std::vector<double> v(300 * 4);
  for (auto& e : v) e = u(rng);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (i % 4 != 0 && miss(rng)) v[i] = kMissing;
  const DataMatrix x(300, 4, v);
  const auto [n, p] = normalize(x);
  const auto back = denormalize(n, p);
  CHECK(back.mask() == x.mask());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (x.observed(i, j))
        worst = std::max(worst, std::abs(back(i, j) - x(i, j)) / std::max(1.0, std::abs(x(i, j))));
  CHECK(worst <= 1e-12);

  const auto stats = column_stats(n);
  for (double s : stats.std) {
    CHECK(s >= 0.0);
    CHECK(s <= 0.5);
  }
}

TEST_CASE("column stats use the population std over observed cells") {
  const DataMatrix x(4, 3, {0, 2, 1, 1, kMissing, 2, kMissing, 2, 3, kMissing, kMissing, kMissing});
  // Column 2 is [1, 2, 3, missing].
  const auto s = column_stats(x);
  CHECK(s.mean[0] == doctest::Approx(0.5));
  CHECK(s.std[0] == doctest::Approx(0.5));
  CHECK(s.mean[1] == doctest::Approx(2.0));
  CHECK(s.std[1] == doctest::Approx(0.0));
  CHECK(s.mean[2] == doctest::Approx(2.0));
  CHECK(s.std[2] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(s.observed_count == std::vector<std::size_t>{2, 2, 3});
}

TEST_CASE("linear columns correlate perfectly") {
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(i * 0.37);
    b.push_back(2.0 * i * 0.37);
  }
  const auto s = correlation_summary(two_col(a, b));
  CHECK(*s.pearson[1] == doctest::Approx(1.0));
  CHECK(*s.spearman[1] == doctest::Approx(1.0));
  CHECK(*s.pearson[0] == 1.0);
  CHECK(s.defined_pairs == 1);
}

TEST_CASE("cubic on a symmetric grid: Spearman 1, Pearson below 1") {
  std::vector<double> a, b;
  for (int i = -5; i <= 5; ++i) {
    a.push_back(i);
    b.push_back(static_cast<double>(i) * i * i);
  }
  const auto s = correlation_summary(two_col(a, b));
  CHECK(*s.spearman[1] == doctest::Approx(1.0));
  CHECK(*s.pearson[1] < 1.0);
  CHECK(*s.pearson[1] == doctest::Approx(pearson_oracle(a, b)).epsilon(1e-12));
}

TEST_CASE("spearman is invariant under monotone transforms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<double> a(200), b(200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = z(rng);
    b[i] = std::exp(a[i]) + 0.001 * i;
  }
  std::vector<double> c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = std::exp(2.0 * a[i]);
  CHECK(*spearman(a, c) == doctest::Approx(1.0));
}

TEST_CASE("average ranks share ties") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("correlation undefined for constant or short columns") {
  const std::vector<double> a{1, 2}, b{3, 4};
  CHECK_FALSE(pearson(a, b).has_value());
  const std::vector<double> c{1, 1, 1, 1}, d{1, 2, 3, 4};
  CHECK_FALSE(pearson(c, d).has_value());
  const auto s = correlation_summary(two_col({1, 2, kMissing, kMissing}, {kMissing, 2, 3, 4}));
  CHECK_FALSE(s.pearson[1].has_value());
  CHECK(s.defined_pairs == 0);
}

TEST_CASE("correlations use pairwise complete rows") {
  const auto full = two_col({1, 2, 3, 4, 5}, {2, 1, 4, 3, 6});
  const auto holed = two_col({1, 2, 3, 4, 5, 100, kMissing}, {2, 1, 4, 3, 6, kMissing, -50});
  CHECK(*correlation_summary(holed).pearson[1] == doctest::Approx(*correlation_summary(full).pearson[1]));
}

TEST_CASE("2d_linear mean absolute Pearson is about 0.95") {
  Rng rng(2024);
  const auto x = gen_2d_linear(500, rng);
  const auto s = correlation_summary(x);
  // Population value sqrt(v / (v + 0.01)) with v = 1/12 + 0.05^2 is 0.946.
  const double v = 1.0 / 12.0 + 0.0025;
  const double rho = std::sqrt(v / (v + 0.01));
  CHECK(rho == doctest::Approx(0.95).epsilon(0.01));
  CHECK(s.pearson_abs_mean == doctest::Approx(rho).epsilon(0.02));
  CHECK(s.pearson_abs_mean == doctest::Approx(pearson_oracle(column(x, 0), column(x, 1))).epsilon(1e-12));
}

} // TEST_SUITE
