#include "knnxkde/knnxkde.hpp"
#include "knnxkde/distance.hpp"
#include "knnxkde/errors.hpp"
#include "knnxkde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace knnxkde {

KnnXKdeConfig KnnXKdeConfig::from_inverse_tau(double inverse_tau, double h, std::size_t n_draws) {
  if (!(inverse_tau > 0.0)) throw std::invalid_argument("inverse temperature must be positive");
  KnnXKdeConfig c;
  c.tau = 1.0 / inverse_tau;
  c.h = h;
  c.n_draws = n_draws;
  c.validate();
  return c;
}

void KnnXKdeConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive and finite");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("bandwidth h must be positive and finite");
  if (n_draws < 1) throw std::invalid_argument("n_draws must be at least 1");
}

std::vector<MissingPatternGroup> enumerate_patterns(const DataMatrix& x) {
  const std::size_t d = x.cols();
  std::map<std::vector<bool>, MissingPatternGroup> groups;
  std::vector<bool> pattern(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t missing = 0;
    for (std::size_t j = 0; j < d; ++j) {
      pattern[j] = !x.observed(i, j);
      missing += pattern[j] ? 1 : 0;
    }
    if (missing == 0) continue;
    if (missing == d) throw std::invalid_argument("row " + std::to_string(i) + " has no observed feature");
    auto& g = groups[pattern];
    if (g.imputee_rows.empty()) {
      g.pattern = pattern;
      for (std::size_t j = 0; j < d; ++j)
        if (pattern[j]) g.missing_columns.push_back(j);
    }
    g.imputee_rows.push_back(i);
  }

  std::vector<MissingPatternGroup> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const bool covers = std::all_of(g.missing_columns.begin(), g.missing_columns.end(),
                                      [&](std::size_t j) { return x.observed(i, j); });
      if (covers) g.donor_rows.push_back(i);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<double> softmax_weights(std::span<const double> distances, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  if (distances.empty()) throw EmptyDonors("softmax over an empty donor set");
  const double d_min = *std::min_element(distances.begin(), distances.end());
  if (!std::isfinite(d_min)) throw EmptyDonors("no donor at finite distance");
  std::vector<double> w(distances.size());
  double total = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    w[j] = std::isfinite(distances[j]) ? std::exp(-(distances[j] - d_min) / tau) : 0.0;
    total += w[j];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> donor_weights(const DataMatrix& x_norm, std::size_t imputee,
                                  std::span<const std::size_t> donors, std::span<const double> sigma,
                                  double tau) {
  if (donors.empty()) throw EmptyDonors("row " + std::to_string(imputee) + " has no donor");
  std::vector<double> d(donors.size());
  const auto row = x_norm.row(imputee);
  for (std::size_t j = 0; j < donors.size(); ++j)
    d[j] = nan_std_euclidean(row, x_norm.row(donors[j]), sigma).value;
  return softmax_weights(d, tau);
}

void CellDistribution::validate() const {
  if (donor_values.size() != weights.size()) throw DimensionError("donor values and weights differ in length");
  if (weights.empty()) throw EmptyDonors("cell distribution without donors");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("negative mixture weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture weights do not sum to one");
}

CellDistribution RowDistribution::cell(std::size_t kappa) const {
  if (kappa >= dims()) throw DimensionError("column index outside the row distribution");
  CellDistribution c;
  c.bandwidth = bandwidth;
  c.weights = weights;
  c.donor_values.resize(donors());
  for (std::size_t j = 0; j < donors(); ++j) c.donor_values[j] = donor_matrix[j * dims() + kappa];
  return c;
}

double normal_pdf(double x, double mean, double sd) noexcept {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sd);
}

double normal_cdf(double x, double mean, double sd) noexcept {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

double marginal_density(const CellDistribution& dist, double x) {
  double p = 0.0;
  for (std::size_t j = 0; j < dist.weights.size(); ++j)
    p += dist.weights[j] * normal_pdf(x, dist.donor_values[j], dist.bandwidth);
  return p;
}

double joint_density(const RowDistribution& dist, std::span<const double> x) {
  const std::size_t k = dist.dims();
  if (x.size() != k)
    throw DimensionError("joint_density: expected " + std::to_string(k) + " values, got " + std::to_string(x.size()));
  double p = 0.0;
  for (std::size_t j = 0; j < dist.donors(); ++j) {
    double prod = dist.weights[j];
    for (std::size_t c = 0; c < k && prod > 0.0; ++c)
      prod *= normal_pdf(x[c], dist.donor_matrix[j * k + c], dist.bandwidth);
    p += prod;
  }
  return p;
}

PointStrategy parse_point_strategy(std::string_view name) {
  if (name == "mean") return PointStrategy::Mean;
  if (name == "median") return PointStrategy::Median;
  if (name == "mode") return PointStrategy::Mode;
  if (name == "sample") return PointStrategy::Sample;
  if (name == "sample_mean") return PointStrategy::SampleMean;
  throw std::invalid_argument("unknown point strategy '" + std::string(name) +
                              "' (expected mean, median, mode, sample, sample_mean)");
}

std::string_view to_string(PointStrategy s) noexcept {
  switch (s) {
  case PointStrategy::Mean: return "mean";
  case PointStrategy::Median: return "median";
  case PointStrategy::Mode: return "mode";
  case PointStrategy::Sample: return "sample";
  case PointStrategy::SampleMean: return "sample_mean";
  }
  return "mean";
}

double mixture_mean(const CellDistribution& dist) {
  double m = 0.0;
  for (std::size_t j = 0; j < dist.weights.size(); ++j) m += dist.weights[j] * dist.donor_values[j];
  return m;
}

double mixture_median(const CellDistribution& dist) {
  const auto [lo_it, hi_it] = std::minmax_element(dist.donor_values.begin(), dist.donor_values.end());
  double lo = *lo_it - 10.0 * dist.bandwidth;
  double hi = *hi_it + 10.0 * dist.bandwidth;
  auto cdf = [&](double x) {
    double c = 0.0;
    for (std::size_t j = 0; j < dist.weights.size(); ++j)
      c += dist.weights[j] * normal_cdf(x, dist.donor_values[j], dist.bandwidth);
    return c;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mixture_mode(const CellDistribution& dist) {
  const auto [lo_it, hi_it] = std::minmax_element(dist.donor_values.begin(), dist.donor_values.end());
  const double lo = std::min(-0.1, *lo_it - 3.0 * dist.bandwidth);
  const double hi = std::max(1.1, *hi_it + 3.0 * dist.bandwidth);
  const double step = std::min((1.1 - -0.1) / 1200.0, dist.bandwidth / 10.0);
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  double best_x = lo, best_p = -1.0;
  for (std::size_t g = 0; g < n; ++g) {
    const double x = lo + static_cast<double>(g) * step;
    const double p = marginal_density(dist, x);
    if (p > best_p) {
      best_p = p;
      best_x = x;
    }
  }
  return best_x;
}

namespace {

double draw_cell(const CellDistribution& dist, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(dist.weights.begin(), dist.weights.end());
  std::normal_distribution<double> noise(0.0, dist.bandwidth);
  return dist.donor_values[pick(rng)] + noise(rng);
}

} // namespace

double point_estimate(const CellDistribution& dist, PointStrategy strategy, Rng& rng, std::size_t n_draws) {
  switch (strategy) {
  case PointStrategy::Mean: return mixture_mean(dist);
  case PointStrategy::Median: return mixture_median(dist);
  case PointStrategy::Mode: return mixture_mode(dist);
  case PointStrategy::Sample: return draw_cell(dist, rng);
  case PointStrategy::SampleMean: {
    std::discrete_distribution<std::size_t> pick(dist.weights.begin(), dist.weights.end());
    std::normal_distribution<double> noise(0.0, dist.bandwidth);
    const std::size_t n = std::max<std::size_t>(1, n_draws);
    double sum = 0.0;
    for (std::size_t s = 0; s < n; ++s) sum += dist.donor_values[pick(rng)] + noise(rng);
    return sum / static_cast<double>(n);
  }
  }
  return mixture_mean(dist);
}

std::vector<double> sample_joint(const RowDistribution& dist, std::size_t n_draws, Rng& rng) {
  const std::size_t k = dist.dims();
  std::discrete_distribution<std::size_t> pick(dist.weights.begin(), dist.weights.end());
  std::normal_distribution<double> noise(0.0, dist.bandwidth);
  std::vector<double> out(n_draws * k);
  for (std::size_t s = 0; s < n_draws; ++s) {
    const std::size_t r = pick(rng);
    for (std::size_t c = 0; c < k; ++c) out[s * k + c] = dist.donor_matrix[r * k + c] + noise(rng);
  }
  return out;
}

namespace {

RowDistribution build_row_distribution(const DataMatrix& x_norm, std::size_t row, const MissingPatternGroup& group,
                                       std::span<const double> sigma, const KnnXKdeConfig& config) {
  RowDistribution dist;
  dist.missing_columns = group.missing_columns;
  dist.bandwidth = config.h;
  dist.weights = donor_weights(x_norm, row, group.donor_rows, sigma, config.tau);
  const std::size_t k = group.missing_columns.size();
  dist.donor_matrix.resize(group.donor_rows.size() * k);
  for (std::size_t j = 0; j < group.donor_rows.size(); ++j)
    for (std::size_t c = 0; c < k; ++c) dist.donor_matrix[j * k + c] = x_norm(group.donor_rows[j], group.missing_columns[c]);
  return dist;
}

CellDistribution column_marginal_kde(const DataMatrix& x_norm, std::size_t col, double h) {
  CellDistribution c;
  c.bandwidth = h;
  for (std::size_t i = 0; i < x_norm.rows(); ++i)
    if (x_norm.observed(i, col)) c.donor_values.push_back(x_norm(i, col));
  c.weights.assign(c.donor_values.size(), 1.0 / static_cast<double>(c.donor_values.size()));
  return c;
}

} // namespace

std::vector<std::vector<double>> sample_imputations(const MissingPatternGroup& group, const DataMatrix& x_norm,
                                                    std::span<const double> sigma, const KnnXKdeConfig& config,
                                                    Rng& rng) {
  config.validate();
  if (group.donor_rows.empty()) throw EmptyDonors("missing pattern has no donor");
  std::vector<std::vector<double>> out;
  out.reserve(group.imputee_rows.size());
  for (std::size_t row : group.imputee_rows) {
    const auto dist = build_row_distribution(x_norm, row, group, sigma, config);
    out.push_back(sample_joint(dist, config.n_draws, rng));
  }
  return out;
}

CellDistribution ImputedRow::cell(std::size_t kappa) const {
  if (fallback) {
    if (kappa >= marginal_kdes.size()) throw DimensionError("column index outside the row distribution");
    return marginal_kdes[kappa];
  }
  return joint.cell(kappa);
}

std::vector<double> ImputedRow::sample(std::size_t n_draws, Rng& rng) const {
  if (!fallback) return sample_joint(joint, n_draws, rng);
  const std::size_t k = marginal_kdes.size();
  std::vector<double> out(n_draws * k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& kde = marginal_kdes[c];
    std::discrete_distribution<std::size_t> pick(kde.weights.begin(), kde.weights.end());
    std::normal_distribution<double> noise(0.0, kde.bandwidth);
    for (std::size_t s = 0; s < n_draws; ++s) out[s * k + c] = kde.donor_values[pick(rng)] + noise(rng);
  }
  return out;
}

ImputeResult impute(const DataMatrix& x, const KnnXKdeConfig& config, const ImputeOptions& options) {
  config.validate();
  ImputeResult result;
  result.imputed = x;
  auto [x_norm, params] = normalize(x);
  result.params = params;
  result.sigma = column_stats(x_norm).std;

  const auto groups = enumerate_patterns(x_norm);
  result.pattern_count = groups.size();
  if (groups.empty()) return result;

  // Column-marginal KDEs, only built when some pattern lacks donors.
  std::vector<std::optional<CellDistribution>> marginals(x.cols());
  for (const auto& g : groups)
    if (g.donor_rows.empty())
      for (std::size_t c : g.missing_columns)
        if (!marginals[c]) marginals[c] = column_marginal_kde(x_norm, c, config.h);

  struct GroupOutput {
    std::vector<ImputedRow> rows;
    std::vector<std::vector<double>> estimates; // per imputee, K values
    std::vector<std::vector<double>> samples;
    std::size_t fallback_cells = 0;
  };
  std::vector<GroupOutput> outputs(groups.size());
  const bool need_samples = options.retain_samples || options.strategy == PointStrategy::SampleMean;

  parallel_for(groups.size(), options.threads, [&](std::size_t gi) {
    const auto& g = groups[gi];
    auto& out = outputs[gi];
    Rng rng(derive_seed(options.seed, {gi}));
    const std::size_t k = g.missing_columns.size();
    for (std::size_t row : g.imputee_rows) {
      ImputedRow ir;
      ir.row = row;
      ir.missing_columns = g.missing_columns;
      if (g.donor_rows.empty()) {
        ir.fallback = true;
        for (std::size_t c : g.missing_columns) ir.marginal_kdes.push_back(*marginals[c]);
        out.fallback_cells += k;
      } else {
        ir.joint = build_row_distribution(x_norm, row, g, result.sigma, config);
      }

      std::vector<double> est(k);
      std::vector<double> draws;
      if (need_samples) draws = ir.sample(config.n_draws, rng);
      switch (options.strategy) {
      case PointStrategy::Sample: {
        const auto one = ir.sample(1, rng);
        std::copy(one.begin(), one.end(), est.begin());
        break;
      }
      case PointStrategy::SampleMean:
        for (std::size_t c = 0; c < k; ++c) {
          double sum = 0.0;
          for (std::size_t s = 0; s < config.n_draws; ++s) sum += draws[s * k + c];
          est[c] = sum / static_cast<double>(config.n_draws);
        }
        break;
      default:
        for (std::size_t c = 0; c < k; ++c) est[c] = point_estimate(ir.cell(c), options.strategy, rng);
      }
      out.estimates.push_back(std::move(est));
      if (options.retain_samples) out.samples.push_back(std::move(draws));
      if (options.retain_distributions) out.rows.push_back(std::move(ir));
    }
  });

  DataMatrix filled = x_norm;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    auto& out = outputs[gi];
    for (std::size_t r = 0; r < g.imputee_rows.size(); ++r)
      for (std::size_t c = 0; c < g.missing_columns.size(); ++c)
        filled(g.imputee_rows[r], g.missing_columns[c]) = out.estimates[r][c];
    result.fallback_count += out.fallback_cells;
    if (options.retain_samples)
      for (std::size_t r = 0; r < g.imputee_rows.size(); ++r) {
        result.sampled_rows.push_back(g.imputee_rows[r]);
        result.sampled_columns.push_back(g.missing_columns);
        result.samples.push_back(std::move(out.samples[r]));
      }
    for (auto& ir : out.rows) result.rows.push_back(std::move(ir));
  }

  const DataMatrix back = denormalize(filled, params);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (!x.observed(i, j)) result.imputed(i, j) = back(i, j);
  return result;
}

nlohmann::json distributions_to_json(const ImputeResult& result, const std::vector<std::string>& names) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& ir : result.rows)
    for (std::size_t c = 0; c < ir.missing_columns.size(); ++c) {
      const auto cell = ir.cell(c);
      const std::size_t col = ir.missing_columns[c];
      cells.push_back({{"row", ir.row},
                       {"col", col},
                       {"column", col < names.size() ? names[col] : std::to_string(col)},
                       {"donor_values", cell.donor_values},
                       {"weights", cell.weights},
                       {"bandwidth", cell.bandwidth},
                       {"fallback", ir.fallback}});
    }
  return {{"units", "normalized"},
          {"normalization", {{"min", result.params.min}, {"max", result.params.max}}},
          {"fallback_count", result.fallback_count},
          {"cells", cells}};
}

std::string samples_to_csv(const ImputeResult& result, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "row,draw";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  const std::size_t d = names.size();
  for (std::size_t r = 0; r < result.sampled_rows.size(); ++r) {
    const std::size_t row = result.sampled_rows[r];
    const auto& cols = result.sampled_columns[r];
    const auto& draws = result.samples[r];
    const std::size_t k = cols.size();
    const std::size_t n = draws.size() / k;
    std::vector<std::string> line(d);
    for (std::size_t s = 0; s < n; ++s) {
      std::fill(line.begin(), line.end(), std::string{});
      for (std::size_t c = 0; c < k; ++c) line[cols[c]] = format_double(draws[s * k + c]);
      out << row << ',' << s;
      for (const auto& v : line) out << ',' << v;
      out << '\n';
    }
  }
  return out.str();
}

} // namespace knnxkde
