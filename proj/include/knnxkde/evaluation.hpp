#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "knnxkde/baselines.hpp"
#include "knnxkde/dataset.hpp"
#include "knnxkde/knnxkde.hpp"
#include "knnxkde/missingness.hpp"

namespace knnxkde {

/// Root mean squared error over the masked cells. Both matrices must be on
/// the same normalized scale. Throws std::invalid_argument when the mask
/// hides nothing.
double nrmse(const DataMatrix& truth, const DataMatrix& imputed, const Mask& mask);

inline constexpr double kHistLow = -0.1;
inline constexpr double kHistHigh = 1.1;
inline constexpr std::size_t kHistBins = 120;

/// Bin index on the fixed [-0.1, 1.1) grid of 120 bins, or nullopt outside it.
std::optional<std::size_t> histogram_bin(double v) noexcept;

/// ln(count_in_truth_bin / (n * 0.01)) with the count floored at 1. The
/// truth is clamped into the edge bins; samples outside the grid are not
/// counted but still enter n.
double loglik_histogram(std::span<const double> samples, double truth);

double loglik_gaussian(const GaussianCellModel& model, double truth);

/// ln of the mixture density at the truth.
double loglik_analytic(const CellDistribution& dist, double truth);

/// Count of histogram peaks whose prominence reaches `min_prominence` times
/// the tallest bin. Prominence is the peak height above the higher of the
/// two lowest points separating it from taller bins (or the range ends).
std::size_t count_modes(std::span<const double> samples, double min_prominence = 0.1,
                        double lo = kHistLow, double hi = kHistHigh, std::size_t bins = kHistBins);

std::vector<double> histogram_counts(std::span<const double> samples, double lo, double hi, std::size_t bins);

enum class MethodId { KnnXKde, Knn, Mice, SoftImpute, Mean, Median };

/// Accepts knnxkde, knn, mice, softimpute, mean, median. The recognised but
/// unbuilt "gain" and "missforest" throw NotImplemented; anything else
/// throws std::invalid_argument.
MethodId parse_method(std::string_view name);
std::string_view to_string(MethodId m) noexcept;

/// Whether the method has a tuned hyperparameter (1/tau, k or lambda).
bool has_hyperparameter(MethodId m) noexcept;
/// Whether the method provides a probabilistic model for scoring.
bool has_loglik(MethodId m) noexcept;

enum class LoglikMode { Histogram, Analytic };
LoglikMode parse_loglik_mode(std::string_view name);
std::string_view to_string(LoglikMode m) noexcept;

struct MethodSettings {
  double h = 0.03;
  std::size_t n_draws = 10000; // draws per row for the histogram likelihood and sample strategies
  PointStrategy strategy = PointStrategy::Mean;
  LoglikMode loglik_mode = LoglikMode::Histogram;
  MiceOptions mice;
  SoftImputeOptions soft;
  std::size_t threads = 1;
};

/// One amputed repeat, normalized with min/max of its observed cells; the
/// truth is mapped with the same parameters.
struct PreparedTrial {
  DataMatrix truth_norm;
  DataMatrix amputed_norm;
  Mask mask;
  NormalizationParams params;
};

PreparedTrial prepare_trial(const DataMatrix& complete, const ScenarioSpec& spec, std::uint64_t seed);

struct MethodRun {
  DataMatrix imputed; // normalized scale
  std::optional<double> mean_loglik;
  std::size_t fallback_count = 0;
  double wall_clock_s = 0.0; // imputation only
};

/// Impute a prepared trial. `hyperparameter` is 1/tau, k or lambda and is
/// ignored by Mean, Median and MICE. The likelihood is only computed when
/// asked and when the method has one.
MethodRun run_method(MethodId method, double hyperparameter, const PreparedTrial& trial,
                     const MethodSettings& settings, std::uint64_t seed, bool with_loglik);

struct GridPointResult {
  double value = 0.0;
  std::vector<double> nrmse; // per repeat
  double mean_nrmse = 0.0;
  double std_nrmse = 0.0;
  std::size_t fallback_count = 0;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  double best_value = 0.0;
  std::vector<GridPointResult> table;
};

/// Index of the smallest score; a later score must beat the incumbent by
/// more than 1e-12 to win. Non-finite scores lose to any finite one.
std::size_t select_best(std::span<const double> scores);

/// Mean NRMSE over `trials` for every grid value. Repeat r runs with seed
/// derive_seed(seed, {r}) at every grid point. A point with any failing
/// repeat is recorded as failed and scored +inf.
GridSearchResult grid_search(MethodId method, std::span<const double> grid, std::span<const PreparedTrial> trials,
                             const MethodSettings& settings, std::uint64_t seed, std::size_t threads = 1);

/// Default search grids.
std::vector<double> default_grid(MethodId m);

struct MethodScore {
  std::string dataset;
  std::string method;
  std::optional<double> score;
};

struct RankEntry {
  std::string method;
  double mean_rank = 0.0;
  double std_rank = 0.0; // population std over datasets
  std::size_t datasets = 0;
};

struct RankSummary {
  std::vector<RankEntry> entries; // in order of first appearance
  std::vector<std::string> notes; // excluded (dataset, method) pairs
};

/// Rank methods within each dataset (1 = best, ties share the mean rank)
/// and aggregate over datasets. Pairs without a score are left out of their
/// dataset's ranking.
RankSummary rank_methods(std::span<const MethodScore> scores, bool lower_is_better = true);

} // namespace knnxkde
