#include "knnxkde/evaluation.hpp"
#include "knnxkde/errors.hpp"
#include "knnxkde/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

namespace knnxkde {

double nrmse(const DataMatrix& truth, const DataMatrix& imputed, const Mask& mask) {
  if (truth.rows() != imputed.rows() || truth.cols() != imputed.cols() || mask.rows != truth.rows() ||
      mask.cols != truth.cols())
    throw DimensionError("nrmse: truth, imputation and mask shapes differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.rows(); ++i)
    for (std::size_t j = 0; j < truth.cols(); ++j)
      if (!mask.is_observed(i, j)) {
        const double d = truth(i, j) - imputed(i, j);
        sum += d * d;
        ++n;
      }
  if (n == 0) throw std::invalid_argument("nrmse is undefined without missing cells");
  return std::sqrt(sum / static_cast<double>(n));
}

std::optional<std::size_t> histogram_bin(double v) noexcept {
  if (!(v >= kHistLow && v < kHistHigh)) return std::nullopt;
  const double width = (kHistHigh - kHistLow) / static_cast<double>(kHistBins);
  const auto b = static_cast<std::size_t>((v - kHistLow) / width);
  return std::min(b, kHistBins - 1);
}

double loglik_histogram(std::span<const double> samples, double truth) {
  if (samples.empty()) throw std::invalid_argument("loglik_histogram needs at least one sample");
  const double width = (kHistHigh - kHistLow) / static_cast<double>(kHistBins);
  std::size_t tb;
  if (truth < kHistLow) tb = 0;
  else if (truth >= kHistHigh) tb = kHistBins - 1;
  else tb = *histogram_bin(truth);
  std::size_t count = 0;
  for (double s : samples) {
    const auto b = histogram_bin(s);
    if (b && *b == tb) ++count;
  }
  const double c = static_cast<double>(std::max<std::size_t>(count, 1));
  return std::log(c / (static_cast<double>(samples.size()) * width));
}

double loglik_gaussian(const GaussianCellModel& model, double truth) {
  const double s = std::max(model.sigma, kSigmaFloor);
  const double z = (truth - model.mu) / s;
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s) - 0.5 * z * z;
}

double loglik_analytic(const CellDistribution& dist, double truth) { return std::log(marginal_density(dist, truth)); }

std::vector<double> histogram_counts(std::span<const double> samples, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw std::invalid_argument("histogram needs hi > lo and at least one bin");
  std::vector<double> counts(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double s : samples) {
    if (!(s >= lo && s < hi)) continue;
    counts[std::min(static_cast<std::size_t>((s - lo) / width), bins - 1)] += 1.0;
  }
  return counts;
}

std::size_t count_modes(std::span<const double> samples, double min_prominence, double lo, double hi,
                        std::size_t bins) {
  const auto h = histogram_counts(samples, lo, hi, bins);
  const double top = *std::max_element(h.begin(), h.end());
  if (top <= 0.0) return 0;
  const std::size_t n = h.size();
  std::size_t modes = 0;
  for (std::size_t i = 0; i < n;) {
    // Plateau [i, j] of equal heights.
    std::size_t j = i;
    while (j + 1 < n && h[j + 1] == h[i]) ++j;
    const bool rises = i == 0 || h[i - 1] < h[i];
    const bool falls = j + 1 == n || h[j + 1] < h[i];
    if (h[i] > 0.0 && rises && falls) {
      // Outside the grid counts as height zero.
      double left_min = h[i];
      bool blocked = false;
      for (std::size_t l = i; l-- > 0;) {
        if (h[l] > h[i]) { blocked = true; break; }
        left_min = std::min(left_min, h[l]);
      }
      if (!blocked) left_min = 0.0;
      double right_min = h[i];
      blocked = false;
      for (std::size_t r = j + 1; r < n; ++r) {
        if (h[r] > h[i]) { blocked = true; break; }
        right_min = std::min(right_min, h[r]);
      }
      if (!blocked) right_min = 0.0;
      if (h[i] - std::max(left_min, right_min) >= min_prominence * top) ++modes;
    }
    i = j + 1;
  }
  return modes;
}

MethodId parse_method(std::string_view name) {
  if (name == "knnxkde" || name == "knn_x_kde" || name == "kNNxKDE") return MethodId::KnnXKde;
  if (name == "knn" || name == "knn_imputer") return MethodId::Knn;
  if (name == "mice") return MethodId::Mice;
  if (name == "softimpute" || name == "soft_impute") return MethodId::SoftImpute;
  if (name == "mean") return MethodId::Mean;
  if (name == "median") return MethodId::Median;
  if (name == "gain" || name == "missforest")
    throw NotImplemented("method '" + std::string(name) +
                         "' is not implemented; see README (supported: knnxkde, knn, mice, softimpute, mean, median)");
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (supported: knnxkde, knn, mice, softimpute, mean, median)");
}

std::string_view to_string(MethodId m) noexcept {
  switch (m) {
  case MethodId::KnnXKde: return "knnxkde";
  case MethodId::Knn: return "knn";
  case MethodId::Mice: return "mice";
  case MethodId::SoftImpute: return "softimpute";
  case MethodId::Mean: return "mean";
  case MethodId::Median: return "median";
  }
  return "knnxkde";
}

bool has_hyperparameter(MethodId m) noexcept {
  return m == MethodId::KnnXKde || m == MethodId::Knn || m == MethodId::SoftImpute;
}

bool has_loglik(MethodId m) noexcept {
  return m == MethodId::KnnXKde || m == MethodId::Knn || m == MethodId::Mice || m == MethodId::Mean;
}

LoglikMode parse_loglik_mode(std::string_view name) {
  if (name == "histogram") return LoglikMode::Histogram;
  if (name == "analytic") return LoglikMode::Analytic;
  throw std::invalid_argument("unknown log-likelihood mode '" + std::string(name) + "' (histogram, analytic)");
}

std::string_view to_string(LoglikMode m) noexcept { return m == LoglikMode::Histogram ? "histogram" : "analytic"; }

PreparedTrial prepare_trial(const DataMatrix& complete, const ScenarioSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  Mask mask = ampute(complete, spec, rng);
  const DataMatrix amputed = apply_mask(complete, mask);
  auto [amputed_norm, params] = normalize(amputed);
  DataMatrix truth_norm = apply_normalization(complete, params);
  return {std::move(truth_norm), std::move(amputed_norm), std::move(mask), std::move(params)};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean_gaussian_loglik(const std::vector<GaussianCellModel>& models, const DataMatrix& truth) {
  if (models.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& m : models) sum += loglik_gaussian(m, truth(m.row, m.col));
  return sum / static_cast<double>(models.size());
}

double to_internal(double v, const NormalizationParams& p, std::size_t col) {
  const double range = p.max[col] - p.min[col];
  return range > 0.0 ? (v - p.min[col]) / range : 0.0;
}

double knnxkde_loglik(const ImputeResult& res, const DataMatrix& truth, const MethodSettings& s, std::uint64_t seed) {
  std::vector<double> per_row_sum(res.rows.size(), 0.0);
  std::vector<std::size_t> per_row_n(res.rows.size(), 0);
  parallel_for(res.rows.size(), s.threads, [&](std::size_t r) {
    const ImputedRow& ir = res.rows[r];
    const std::size_t k = ir.missing_columns.size();
    if (s.loglik_mode == LoglikMode::Analytic) {
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t col = ir.missing_columns[c];
        per_row_sum[r] += loglik_analytic(ir.cell(c), to_internal(truth(ir.row, col), res.params, col));
      }
    } else {
      Rng rng(derive_seed(seed, {0x4c4cULL, ir.row}));
      const auto draws = ir.sample(s.n_draws, rng);
      std::vector<double> column(s.n_draws);
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t col = ir.missing_columns[c];
        for (std::size_t d = 0; d < s.n_draws; ++d) column[d] = draws[d * k + c];
        per_row_sum[r] += loglik_histogram(column, to_internal(truth(ir.row, col), res.params, col));
      }
    }
    per_row_n[r] = k;
  });
  const double total = std::accumulate(per_row_sum.begin(), per_row_sum.end(), 0.0);
  const auto n = std::accumulate(per_row_n.begin(), per_row_n.end(), std::size_t{0});
  return n ? total / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

MethodRun run_method(MethodId method, double hyperparameter, const PreparedTrial& trial,
                     const MethodSettings& settings, std::uint64_t seed, bool with_loglik) {
  const DataMatrix& x = trial.amputed_norm;
  const bool want_ll = with_loglik && has_loglik(method);
  MethodRun run;
  switch (method) {
  case MethodId::KnnXKde: {
    const auto config = KnnXKdeConfig::from_inverse_tau(hyperparameter, settings.h, settings.n_draws);
    ImputeOptions opts;
    opts.strategy = settings.strategy;
    opts.seed = seed;
    opts.threads = settings.threads;
    opts.retain_distributions = want_ll;
    const auto t0 = Clock::now();
    ImputeResult res = impute(x, config, opts);
    run.wall_clock_s = seconds_since(t0);
    run.fallback_count = res.fallback_count;
    if (want_ll) run.mean_loglik = knnxkde_loglik(res, trial.truth_norm, settings, seed);
    run.imputed = std::move(res.imputed);
    break;
  }
  case MethodId::Knn: {
    if (!(hyperparameter >= 1.0)) throw std::invalid_argument("knn needs k >= 1");
    const auto t0 = Clock::now();
    auto res = knn_impute(x, static_cast<std::size_t>(hyperparameter), settings.threads);
    run.wall_clock_s = seconds_since(t0);
    if (want_ll) run.mean_loglik = mean_gaussian_loglik(res.models, trial.truth_norm);
    run.imputed = std::move(res.imputed);
    break;
  }
  case MethodId::Mice: {
    MiceOptions opts = settings.mice;
    opts.seed = seed;
    const auto t0 = Clock::now();
    auto res = mice_impute(x, opts);
    run.wall_clock_s = seconds_since(t0);
    if (want_ll) run.mean_loglik = mean_gaussian_loglik(res.models, trial.truth_norm);
    run.imputed = std::move(res.imputed);
    break;
  }
  case MethodId::SoftImpute: {
    SoftImputeOptions opts = settings.soft;
    opts.lambda = hyperparameter;
    const auto t0 = Clock::now();
    auto res = soft_impute(x, opts);
    run.wall_clock_s = seconds_since(t0);
    run.imputed = std::move(res.imputed);
    break;
  }
  case MethodId::Mean:
  case MethodId::Median: {
    const auto t0 = Clock::now();
    auto res = mean_median_impute(x, method == MethodId::Mean ? ColumnStatistic::Mean : ColumnStatistic::Median);
    run.wall_clock_s = seconds_since(t0);
    if (want_ll) run.mean_loglik = mean_gaussian_loglik(res.models, trial.truth_norm);
    run.imputed = std::move(res.imputed);
    break;
  }
  }
  return run;
}

std::size_t select_best(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("select_best on an empty grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const double cur = scores[best], cand = scores[i];
    if (!std::isfinite(cand)) continue;
    if (!std::isfinite(cur) || cand < cur - 1e-12) best = i;
  }
  return best;
}

GridSearchResult grid_search(MethodId method, std::span<const double> grid, std::span<const PreparedTrial> trials,
                             const MethodSettings& settings, std::uint64_t seed, std::size_t threads) {
  if (grid.empty()) throw std::invalid_argument("grid search needs at least one grid value");
  if (trials.empty()) throw std::invalid_argument("grid search needs at least one repeat");
  const std::size_t g = grid.size(), r = trials.size();
  std::vector<double> scores(g * r, 0.0);
  std::vector<std::size_t> fallbacks(g * r, 0);
  std::vector<std::string> errors(g * r);
  MethodSettings inner = settings;
  inner.threads = 1;
  parallel_for(g * r, threads, [&](std::size_t idx) {
    const std::size_t gi = idx / r, ri = idx % r;
    try {
      const auto run = run_method(method, grid[gi], trials[ri], inner, derive_seed(seed, {ri}), false);
      scores[idx] = nrmse(trials[ri].truth_norm, run.imputed, trials[ri].mask);
      fallbacks[idx] = run.fallback_count;
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  });

  GridSearchResult out;
  std::vector<double> means(g);
  for (std::size_t gi = 0; gi < g; ++gi) {
    GridPointResult p;
    p.value = grid[gi];
    for (std::size_t ri = 0; ri < r; ++ri) {
      const std::size_t idx = gi * r + ri;
      if (!errors[idx].empty() && !p.failed) {
        p.failed = true;
        p.error = errors[idx];
      }
      p.nrmse.push_back(scores[idx]);
      p.fallback_count += fallbacks[idx];
    }
    if (p.failed) {
      p.mean_nrmse = std::numeric_limits<double>::infinity();
      p.std_nrmse = std::numeric_limits<double>::quiet_NaN();
    } else {
      p.mean_nrmse = std::accumulate(p.nrmse.begin(), p.nrmse.end(), 0.0) / static_cast<double>(r);
      double ss = 0.0;
      for (double v : p.nrmse) ss += (v - p.mean_nrmse) * (v - p.mean_nrmse);
      p.std_nrmse = std::sqrt(ss / static_cast<double>(r));
    }
    means[gi] = p.mean_nrmse;
    out.table.push_back(std::move(p));
  }
  out.best_index = select_best(means);
  out.best_value = grid[out.best_index];
  return out;
}

std::vector<double> default_grid(MethodId m) {
  switch (m) {
  case MethodId::KnnXKde: return {10, 25, 50, 100, 250, 500, 1000};
  case MethodId::Knn: return {1, 2, 5, 10, 20, 50, 100};
  case MethodId::SoftImpute: return {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
  default: return {std::numeric_limits<double>::quiet_NaN()};
  }
}

RankSummary rank_methods(std::span<const MethodScore> scores, bool lower_is_better) {
  std::vector<std::string> methods, datasets;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& s : scores) {
    remember(methods, s.method);
    remember(datasets, s.dataset);
  }
  std::map<std::pair<std::string, std::string>, std::optional<double>> lookup;
  for (const auto& s : scores) lookup[{s.dataset, s.method}] = s.score;

  RankSummary out;
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& d : datasets) {
    std::vector<std::string> present;
    std::vector<double> values;
    for (const auto& m : methods) {
      const auto it = lookup.find({d, m});
      if (it == lookup.end() || !it->second || std::isnan(*it->second)) {
        out.notes.push_back("dataset '" + d + "': no score for method '" + m + "', excluded from ranking");
        continue;
      }
      present.push_back(m);
      values.push_back(lower_is_better ? *it->second : -*it->second);
    }
    const auto r = average_ranks(values);
    for (std::size_t i = 0; i < present.size(); ++i) ranks[present[i]].push_back(r[i]);
  }
  for (const auto& m : methods) {
    RankEntry e;
    e.method = m;
    const auto& v = ranks[m];
    e.datasets = v.size();
    if (!v.empty()) {
      e.mean_rank = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - e.mean_rank) * (x - e.mean_rank);
      e.std_rank = std::sqrt(ss / static_cast<double>(v.size()));
    } else {
      e.mean_rank = e.std_rank = std::numeric_limits<double>::quiet_NaN();
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

} // namespace knnxkde
