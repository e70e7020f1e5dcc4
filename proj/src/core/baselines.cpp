#include "knnxkde/baselines.hpp"
#include "knnxkde/distance.hpp"
#include "knnxkde/parallel.hpp"
#include "knnxkde/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace knnxkde {

namespace {

double pop_std(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return v.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(v.size()));
}

std::vector<double> observed_column(const DataMatrix& x, std::size_t col) {
  std::vector<double> v;
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (x.observed(i, col)) v.push_back(x(i, col));
  if (v.empty()) throw std::invalid_argument("column " + std::to_string(col) + " has no observed value");
  return v;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double upper = v[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + n / 2);
  return 0.5 * (lower + upper);
}

} // namespace

BaselineResult knn_impute(const DataMatrix& x, std::size_t k, std::size_t threads) {
  if (k < 1) throw std::invalid_argument("knn_impute: k must be at least 1");
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> col_mean(d), col_std(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto v = observed_column(x, j);
    col_mean[j] = mean_of(v);
    col_std[j] = pop_std(v, col_mean[j]);
  }

  std::vector<std::size_t> incomplete;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (!x.observed(i, j)) {
        incomplete.push_back(i);
        break;
      }

  std::vector<std::vector<GaussianCellModel>> per_row(incomplete.size());
  parallel_for(incomplete.size(), threads, [&](std::size_t r) {
    const std::size_t i = incomplete[r];
    std::vector<double> dist(n);
    for (std::size_t j = 0; j < n; ++j) dist[j] = j == i ? INFINITY : nan_euclidean(x.row(i), x.row(j)).value;
    std::vector<std::size_t> candidates;
    std::vector<double> values;
    for (std::size_t col = 0; col < d; ++col) {
      if (x.observed(i, col)) continue;
      candidates.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && x.observed(j, col) && std::isfinite(dist[j])) candidates.push_back(j);
      GaussianCellModel m{i, col, col_mean[col], std::max(col_std[col], kSigmaFloor)};
      if (!candidates.empty()) {
        const std::size_t take = std::min(k, candidates.size());
        auto closer = [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(), closer);
        values.clear();
        for (std::size_t t = 0; t < take; ++t) values.push_back(x(candidates[t], col));
        m.mu = mean_of(values);
        m.sigma = std::max(pop_std(values, m.mu), kSigmaFloor);
      }
      per_row[r].push_back(m);
    }
  });

  BaselineResult out{x, {}};
  for (auto& models : per_row)
    for (const auto& m : models) {
      out.imputed(m.row, m.col) = m.mu;
      out.models.push_back(m);
    }
  return out;
}

namespace {

// One full chained-equations run; returns the completed matrix.
DataMatrix mice_single(const DataMatrix& x, const MiceOptions& options, std::uint64_t seed) {
  const std::size_t n = x.rows(), d = x.cols();
  Rng rng(seed);
  Eigen::MatrixXd current(n, d);
  std::vector<std::vector<std::size_t>> obs_rows(d), miss_rows(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto v = observed_column(x, j);
    const double mean = mean_of(v);
    for (std::size_t i = 0; i < n; ++i) {
      if (x.observed(i, j)) {
        current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j);
        obs_rows[j].push_back(i);
      } else {
        current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mean;
        miss_rows[j].push_back(i);
      }
    }
  }

  std::vector<std::size_t> targets;
  for (std::size_t j = 0; j < d; ++j)
    if (!miss_rows[j].empty()) targets.push_back(j);

  const auto p = static_cast<Eigen::Index>(d); // intercept + (d - 1) predictors
  for (std::size_t round = 0; round < options.n_iters; ++round) {
    std::shuffle(targets.begin(), targets.end(), rng);
    for (std::size_t target : targets) {
      const auto& rows = obs_rows[target];
      const auto m = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd design(m, p);
      Eigen::VectorXd y(m);
      auto fill_row = [&](Eigen::Ref<Eigen::RowVectorXd> dst, std::size_t i) {
        dst(0) = 1.0;
        Eigen::Index c = 1;
        for (std::size_t j = 0; j < d; ++j)
          if (j != target) dst(c++) = current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      };
      for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::RowVectorXd row(p);
        fill_row(row, rows[static_cast<std::size_t>(r)]);
        design.row(r) = row;
        y(r) = current(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]), static_cast<Eigen::Index>(target));
      }
      Eigen::MatrixXd gram = design.transpose() * design;
      const Eigen::VectorXd rhs = design.transpose() * y;
      Eigen::LLT<Eigen::MatrixXd> llt(gram);
      if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
        // Singular normal equations: small ridge penalty.
        gram.diagonal().array() += 1e-8;
        llt.compute(gram);
      }
      const Eigen::VectorXd beta = llt.solve(rhs);
      const Eigen::VectorXd resid = y - design * beta;
      const double dof = m > p ? static_cast<double>(m - p) : std::max<double>(1.0, static_cast<double>(m));
      const double resid_sd = std::sqrt(resid.squaredNorm() / dof);
      std::normal_distribution<double> noise(0.0, resid_sd > 0.0 ? resid_sd : 1.0);

      for (std::size_t i : miss_rows[target]) {
        Eigen::RowVectorXd row(p);
        fill_row(row, i);
        double pred = row.dot(beta);
        if (options.add_noise && resid_sd > 0.0) pred += noise(rng);
        current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(target)) = pred;
      }
    }
  }

  DataMatrix out = x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (!x.observed(i, j)) out(i, j) = current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

} // namespace

BaselineResult mice_impute(const DataMatrix& x, const MiceOptions& options) {
  if (options.n_repeats < 1) throw std::invalid_argument("mice_impute: n_repeats must be at least 1");
  std::vector<DataMatrix> runs;
  runs.reserve(options.n_repeats);
  for (std::size_t r = 0; r < options.n_repeats; ++r) runs.push_back(mice_single(x, options, derive_seed(options.seed, {r})));

  BaselineResult out{x, {}};
  std::vector<double> vals(options.n_repeats);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x.observed(i, j)) continue;
      for (std::size_t r = 0; r < runs.size(); ++r) vals[r] = runs[r](i, j);
      const double mu = mean_of(vals);
      out.imputed(i, j) = mu;
      out.models.push_back({i, j, mu, std::max(pop_std(vals, mu), kSigmaFloor)});
    }
  return out;
}

SoftImputeResult soft_impute(const DataMatrix& x, const SoftImputeOptions& options) {
  if (!(options.lambda >= 0.0)) throw std::invalid_argument("soft_impute: lambda must be non-negative");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto d = static_cast<Eigen::Index>(x.cols());

  std::vector<double> offset(x.cols(), 0.0);
  if (options.center)
    for (std::size_t j = 0; j < x.cols(); ++j) offset[j] = mean_of(observed_column(x, j));
  else
    for (std::size_t j = 0; j < x.cols(); ++j) observed_column(x, j); // presence check

  Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(n, d);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (x.observed(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        obs(i, j) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - offset[static_cast<std::size_t>(j)];
        mask(i, j) = 1.0;
      }

  auto objective = [&](const Eigen::MatrixXd& z, const Eigen::VectorXd& singular) {
    const double fit = (mask.array() * (obs - z).array()).matrix().squaredNorm();
    return 0.5 * fit + options.lambda * singular.sum();
  };

  SoftImputeResult result;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, d);
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const Eigen::MatrixXd filled = mask.array() * obs.array() + (1.0 - mask.array()) * z.array();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(filled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = (svd.singularValues().array() - options.lambda).max(0.0);
    if (options.max_rank > 0)
      for (Eigen::Index r = static_cast<Eigen::Index>(options.max_rank); r < s.size(); ++r) s(r) = 0.0;
    const Eigen::MatrixXd next = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    const double change = (next - z).squaredNorm();
    const double scale = std::max(z.squaredNorm(), 1e-300);
    z = next;
    result.objective.push_back(objective(z, s));
    result.iterations = it + 1;
    if (change / scale < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.imputed = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (!x.observed(i, j))
        result.imputed(i, j) = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + offset[j];
  return result;
}

BaselineResult mean_median_impute(const DataMatrix& x, ColumnStatistic statistic) {
  BaselineResult out{x, {}};
  std::vector<double> fill(x.cols()), mu(x.cols()), sd(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto v = observed_column(x, j);
    mu[j] = mean_of(v);
    sd[j] = std::max(pop_std(v, mu[j]), kSigmaFloor);
    fill[j] = statistic == ColumnStatistic::Mean ? mu[j] : median_of(std::move(v));
  }
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (!x.observed(i, j)) {
        out.imputed(i, j) = fill[j];
        out.models.push_back({i, j, mu[j], sd[j]});
      }
  return out;
}

} // namespace knnxkde
