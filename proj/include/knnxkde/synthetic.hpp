#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "knnxkde/dataset.hpp"
#include "knnxkde/random.hpp"

namespace knnxkde {

/// x1 = u + N(0, 0.05) with u ~ U[0,1]; x2 = x1 + N(0, 0.1). Noise terms are std devs.
DataMatrix gen_2d_linear(std::size_t n, Rng& rng);

/// u = U[0,1] + N(0, 0.05); x1 = 4 pi u; x2 = sin(x1) + N(0, 0.2).
DataMatrix gen_2d_sine(std::size_t n, Rng& rng);

/// theta ~ U[0, 2pi), r = 1 + N(0, 0.1); (r cos theta, r sin theta).
DataMatrix gen_2d_ring(std::size_t n, Rng& rng);

inline constexpr std::size_t kGaussiansDim = 8;
inline constexpr std::size_t kGaussiansFactors = 4;
inline constexpr std::size_t kGaussiansComponents = 3;
inline constexpr double kGaussiansMeanVariance = 4.0;
inline constexpr double kGaussiansNoiseFloor = 0.1;
inline constexpr std::size_t kGaussiansDefaultRows = 10000;

/// Parameters drawn for the factor-model mixture, kept for inspection.
struct GaussianMixtureModel {
  std::vector<Eigen::VectorXd> means;       // N(0, 4 I)
  std::vector<Eigen::MatrixXd> factors;     // 8x4 standard normal
  std::vector<Eigen::MatrixXd> covariances; // W W^T + 0.1 I
};

struct GaussiansSample {
  DataMatrix data;
  GaussianMixtureModel model;
  std::vector<std::size_t> labels;
};

/// Equal-weight mixture of three 8-dim Gaussians with 4-factor covariances.
GaussiansSample gen_gaussians_full(std::size_t n, Rng& rng);
DataMatrix gen_gaussians(std::size_t n, Rng& rng);

inline constexpr std::array<std::string_view, 4> kGeneratorNames{"2d_linear", "2d_sine", "2d_ring", "gaussians"};

/// Dispatch by name. Throws std::invalid_argument for n == 0 or an unknown
/// name (the message lists the valid ones).
DataMatrix generate(std::string_view name, std::size_t n, std::uint64_t seed);

/// Name, seed, n and the generator's constants.
nlohmann::json generator_manifest(std::string_view name, std::size_t n, std::uint64_t seed);

} // namespace knnxkde
