#include "knnxkde/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace knnxkde {

namespace {

DataMatrix two_column(std::vector<double> values, std::size_t n) {
  return DataMatrix(n, 2, std::move(values), {"x1", "x2"});
}

std::string valid_names() {
  std::string out;
  for (auto name : kGeneratorNames) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

void check_rows(std::size_t n) {
  if (n == 0) throw std::invalid_argument("generator row count must be at least 1");
}

} // namespace

DataMatrix gen_2d_linear(std::size_t n, Rng& rng) {
  check_rows(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> mollify(0.0, 0.05), eps(0.0, 0.1);
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = u(rng) + mollify(rng);
    v[2 * i] = x1;
    v[2 * i + 1] = x1 + eps(rng);
  }
  return two_column(std::move(v), n);
}

DataMatrix gen_2d_sine(std::size_t n, Rng& rng) {
  check_rows(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> mollify(0.0, 0.05), eps(0.0, 0.2);
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = 4.0 * std::numbers::pi * (u(rng) + mollify(rng));
    v[2 * i] = x1;
    v[2 * i + 1] = std::sin(x1) + eps(rng);
  }
  return two_column(std::move(v), n);
}

DataMatrix gen_2d_ring(std::size_t n, Rng& rng) {
  check_rows(n);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> eps(0.0, 0.1);
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = angle(rng);
    const double r = 1.0 + eps(rng);
    v[2 * i] = r * std::cos(theta);
    v[2 * i + 1] = r * std::sin(theta);
  }
  return two_column(std::move(v), n);
}

GaussiansSample gen_gaussians_full(std::size_t n, Rng& rng) {
  check_rows(n);
  constexpr std::size_t d = kGaussiansDim, f = kGaussiansFactors;
  std::normal_distribution<double> z(0.0, 1.0);
  const double mean_sd = std::sqrt(kGaussiansMeanVariance);
  const double noise_sd = std::sqrt(kGaussiansNoiseFloor);

  GaussianMixtureModel model;
  for (std::size_t c = 0; c < kGaussiansComponents; ++c) {
    Eigen::VectorXd mu(d);
    for (std::size_t j = 0; j < d; ++j) mu(j) = mean_sd * z(rng);
    Eigen::MatrixXd w(d, f);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < f; ++b) w(a, b) = z(rng);
    Eigen::MatrixXd cov = w * w.transpose();
    cov.diagonal().array() += kGaussiansNoiseFloor;
    model.means.push_back(std::move(mu));
    model.factors.push_back(std::move(w));
    model.covariances.push_back(std::move(cov));
  }

  // x = mu + W z_f + sqrt(0.1) z_d has covariance W W^T + 0.1 I exactly.
  std::uniform_int_distribution<std::size_t> pick(0, kGaussiansComponents - 1);
  std::vector<double> v(n * d);
  std::vector<std::size_t> labels(n);
  Eigen::VectorXd zf(f);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    labels[i] = c;
    for (std::size_t b = 0; b < f; ++b) zf(b) = z(rng);
    const Eigen::VectorXd x = model.means[c] + model.factors[c] * zf;
    for (std::size_t j = 0; j < d; ++j) v[i * d + j] = x(j) + noise_sd * z(rng);
  }
  return {DataMatrix(n, d, std::move(v)), std::move(model), std::move(labels)};
}

DataMatrix gen_gaussians(std::size_t n, Rng& rng) { return gen_gaussians_full(n, rng).data; }

DataMatrix generate(std::string_view name, std::size_t n, std::uint64_t seed) {
  check_rows(n);
  Rng rng(seed);
  if (name == "2d_linear") return gen_2d_linear(n, rng);
  if (name == "2d_sine") return gen_2d_sine(n, rng);
  if (name == "2d_ring") return gen_2d_ring(n, rng);
  if (name == "gaussians") return gen_gaussians(n, rng);
  throw std::invalid_argument("unknown generator '" + std::string(name) + "' (valid: " + valid_names() + ")");
}

nlohmann::json generator_manifest(std::string_view name, std::size_t n, std::uint64_t seed) {
  nlohmann::json params;
  if (name == "2d_linear") {
    params = {{"u", "uniform[0,1]"}, {"mollify_sd", 0.05}, {"noise_sd", 0.1}};
  } else if (name == "2d_sine") {
    params = {{"u", "uniform[0,1]"}, {"mollify_sd", 0.05}, {"scale", "4*pi"}, {"noise_sd", 0.2}};
  } else if (name == "2d_ring") {
    params = {{"radius", 1.0}, {"radius_sd", 0.1}};
  } else if (name == "gaussians") {
    params = {{"dim", kGaussiansDim},
              {"factors", kGaussiansFactors},
              {"components", kGaussiansComponents},
              {"mean_variance", kGaussiansMeanVariance},
              {"noise_floor", kGaussiansNoiseFloor},
              {"weights", "equal"}};
  } else {
    throw std::invalid_argument("unknown generator '" + std::string(name) + "' (valid: " + valid_names() + ")");
  }
  return {{"generator", name}, {"n", n}, {"seed", seed}, {"rng", "mt19937_64"}, {"parameters", params}};
}

} // namespace knnxkde
