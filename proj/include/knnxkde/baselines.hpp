#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "knnxkde/dataset.hpp"

namespace knnxkde {

/// Floor applied to every Gaussian spread so deterministic predictors still
/// give finite log-likelihoods.
inline constexpr double kSigmaFloor = 1e-6;

struct GaussianCellModel {
  std::size_t row = 0;
  std::size_t col = 0;
  double mu = 0.0;
  double sigma = kSigmaFloor;
};

/// Imputed matrix plus one Gaussian per missing cell (row-major cell order).
struct BaselineResult {
  DataMatrix imputed;
  std::vector<GaussianCellModel> models;
};

/// Column-wise kNN imputation. For each missing cell (i, k) the rows observed
/// in column k are ranked by NaN-Euclidean distance to row i (ties by row
/// index, rows sharing no observed feature are skipped) and the k nearest
/// values are averaged. Falls back to the column mean when no row qualifies.
BaselineResult knn_impute(const DataMatrix& x, std::size_t k, std::size_t threads = 1);

struct MiceOptions {
  std::size_t n_iters = 10;
  std::size_t n_repeats = 5;
  bool add_noise = true; // stochastic regression imputation
  std::uint64_t seed = 0;
};

/// Chained linear regressions. Each repeat starts from column means and, for
/// n_iters rounds, visits the columns in a fresh random order, regresses the
/// column on all others over its originally observed rows and re-imputes its
/// missing cells (plus residual noise when add_noise). The returned matrix
/// holds the per-cell mean over repeats; models hold mean and spread.
BaselineResult mice_impute(const DataMatrix& x, const MiceOptions& options = {});

struct SoftImputeOptions {
  double lambda = 1.0;
  std::size_t max_iters = 100;
  double tol = 1e-5;
  std::size_t max_rank = 0; // 0 keeps every singular value above lambda
  bool center = true;       // subtract observed column means first
};

struct SoftImputeResult {
  DataMatrix imputed;
  std::vector<double> objective; // 0.5 ||P_obs(X - Z)||_F^2 + lambda ||Z||_*, per iteration
  std::size_t iterations = 0;
  bool converged = false;
};

/// Iterative soft-thresholded SVD completion. Expects data already on a
/// common scale (the benchmark feeds min-max normalized matrices).
SoftImputeResult soft_impute(const DataMatrix& x, const SoftImputeOptions& options = {});

enum class ColumnStatistic { Mean, Median };

/// Fill each missing cell with its column's observed mean or median. Models
/// are (column mean, column std) regardless of statistic.
BaselineResult mean_median_impute(const DataMatrix& x, ColumnStatistic statistic);

} // namespace knnxkde
