#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "knnxkde/dataset.hpp"
#include "knnxkde/random.hpp"

namespace knnxkde {

/// Hyperparameters of the kNN x KDE imputer. `tau` is the softmax
/// temperature applied to NaN-std-Euclidean distances, `h` the shared
/// Gaussian kernel bandwidth in normalized units, `n_draws` the number of
/// joint samples per incomplete row.
struct KnnXKdeConfig {
  double tau = 1.0 / 50.0;
  double h = 0.03;
  std::size_t n_draws = 10000;

  static KnnXKdeConfig from_inverse_tau(double inverse_tau, double h = 0.03, std::size_t n_draws = 10000);
  double inverse_tau() const noexcept { return 1.0 / tau; }
  /// Throws std::invalid_argument unless tau > 0, h > 0 and n_draws >= 1.
  void validate() const;
};

/// Rows sharing one set of missing columns, together with every row that is
/// observed on all of those columns (other columns may be missing).
struct MissingPatternGroup {
  std::vector<bool> pattern;                // true = column missing
  std::vector<std::size_t> missing_columns; // indices where pattern is true
  std::vector<std::size_t> imputee_rows;
  std::vector<std::size_t> donor_rows;
};

/// One group per distinct missing pattern among incomplete rows, ordered by
/// pattern. Throws std::invalid_argument for a row with every cell missing.
std::vector<MissingPatternGroup> enumerate_patterns(const DataMatrix& x);

/// Stabilised softmax of -d/tau: exp(-(d - d_min)/tau) normalised to sum to
/// one. Infinite distances get weight zero.
std::vector<double> softmax_weights(std::span<const double> distances, double tau);

/// Softmax weights of `donors` for the imputee row, from NaN-std-Euclidean
/// distances on `x_norm`. Throws EmptyDonors when `donors` is empty.
std::vector<double> donor_weights(const DataMatrix& x_norm, std::size_t imputee,
                                  std::span<const std::size_t> donors, std::span<const double> sigma,
                                  double tau);

/// Gaussian mixture for a single missing cell.
struct CellDistribution {
  std::vector<double> donor_values;
  std::vector<double> weights;
  double bandwidth = 0.0;

  /// Checks matching lengths, non-negative weights summing to 1 (1e-9) and
  /// a positive bandwidth.
  void validate() const;
};

/// Joint mixture for all K missing cells of one row. One weight vector is
/// shared by every column: a donor contributes a whole K-vector.
struct RowDistribution {
  std::vector<std::size_t> missing_columns;
  std::vector<double> donor_matrix; // donors x K, row-major
  std::vector<double> weights;
  double bandwidth = 0.0;

  std::size_t donors() const noexcept { return weights.size(); }
  std::size_t dims() const noexcept { return missing_columns.size(); }
  CellDistribution cell(std::size_t kappa) const;
};

double normal_pdf(double x, double mean, double sd) noexcept;
double normal_cdf(double x, double mean, double sd) noexcept;

double marginal_density(const CellDistribution& dist, double x);

/// Throws DimensionError when x.size() != dist.dims().
double joint_density(const RowDistribution& dist, std::span<const double> x);

enum class PointStrategy {
  Mean,       // analytic mixture mean
  Median,     // root of the mixture CDF
  Mode,       // grid scan of the mixture density
  Sample,     // one random draw
  SampleMean, // mean of n_draws random draws
};

PointStrategy parse_point_strategy(std::string_view name);
std::string_view to_string(PointStrategy s) noexcept;

double mixture_mean(const CellDistribution& dist);
double mixture_median(const CellDistribution& dist);
/// Highest-density point on a grid spanning [-0.1, 1.1] (extended to cover
/// every donor) with at least 1201 points and spacing at most h/10.
double mixture_mode(const CellDistribution& dist);

/// Mean/Median/Mode are deterministic; Sample draws once from `rng`.
/// SampleMean averages `n_draws` draws.
double point_estimate(const CellDistribution& dist, PointStrategy strategy, Rng& rng,
                      std::size_t n_draws = 1);

/// n draws x K values, row-major. Each draw picks one donor by weight and
/// adds independent N(0, h) noise to each of its K values.
std::vector<double> sample_joint(const RowDistribution& dist, std::size_t n_draws, Rng& rng);

/// Draws for every imputee of `group` (n_draws x K each, in imputee order).
/// Throws EmptyDonors for an empty donor set.
std::vector<std::vector<double>> sample_imputations(const MissingPatternGroup& group, const DataMatrix& x_norm,
                                                    std::span<const double> sigma, const KnnXKdeConfig& config,
                                                    Rng& rng);

/// The probabilistic model for one incomplete row. Rows whose pattern had no
/// donor fall back to independent column-marginal KDEs.
struct ImputedRow {
  std::size_t row = 0;
  std::vector<std::size_t> missing_columns;
  bool fallback = false;
  RowDistribution joint;                       // valid when !fallback
  std::vector<CellDistribution> marginal_kdes; // valid when fallback

  CellDistribution cell(std::size_t kappa) const;
  std::vector<double> sample(std::size_t n_draws, Rng& rng) const;
};

struct ImputeOptions {
  PointStrategy strategy = PointStrategy::Mean;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool retain_distributions = true;
  bool retain_samples = false; // n_draws joint samples per row, normalized units
};

struct ImputeResult {
  DataMatrix imputed;           // original units, no missing cell
  NormalizationParams params;
  std::vector<double> sigma;    // per-column std of the normalized input
  std::vector<ImputedRow> rows; // empty unless retain_distributions
  std::vector<std::vector<double>> samples; // aligned with incomplete rows
  std::vector<std::size_t> sampled_rows;
  std::vector<std::vector<std::size_t>> sampled_columns;
  std::size_t fallback_count = 0; // cells imputed from a column-marginal KDE
  std::size_t pattern_count = 0;
};

/// Normalize, group rows by missing pattern, weight donors, build the
/// mixtures, take point estimates and map back to original units. Observed
/// cells are copied through untouched. Every pattern group draws from its
/// own stream derived from `options.seed`, so results do not depend on the
/// thread count.
ImputeResult impute(const DataMatrix& x, const KnnXKdeConfig& config, const ImputeOptions& options = {});

/// Per cell {row, col, donor_values, weights, bandwidth, fallback}; values in
/// normalized units, with the normalization parameters alongside.
nlohmann::json distributions_to_json(const ImputeResult& result, const std::vector<std::string>& names);

/// One line per retained draw: row, draw, then every column (empty where the
/// column was observed for that row). Normalized units.
std::string samples_to_csv(const ImputeResult& result, const std::vector<std::string>& names);

} // namespace knnxkde
