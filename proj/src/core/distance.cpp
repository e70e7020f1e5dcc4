#include "knnxkde/distance.hpp"
#include "knnxkde/errors.hpp"
#include "knnxkde/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace knnxkde {

RowPairDistance nan_euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError("nan_euclidean: row lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  double sum = 0.0;
  std::size_t common = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (is_missing(a[k]) || is_missing(b[k])) continue;
    const double diff = a[k] - b[k];
    sum += diff * diff;
    ++common;
  }
  if (common == 0) return {std::numeric_limits<double>::infinity(), 0};
  const double scale = static_cast<double>(a.size()) / static_cast<double>(common);
  return {std::sqrt(scale * sum), common};
}

RowPairDistance nan_std_euclidean(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> sigma) {
  if (a.size() != b.size() || sigma.size() != a.size())
    throw DimensionError("nan_std_euclidean: rows and sigma must share one length");
  double sum = 0.0;
  std::size_t common = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (is_missing(a[k]) || is_missing(b[k])) {
      sum += sigma[k] * sigma[k];
      continue;
    }
    const double diff = a[k] - b[k];
    sum += diff * diff;
    ++common;
  }
  return {std::sqrt(sum), common};
}

std::vector<double> pairwise_distances(const DataMatrix& x, std::span<const std::size_t> queries,
                                       std::span<const std::size_t> candidates, Metric metric,
                                       std::span<const double> sigma, std::size_t threads) {
  if (metric == Metric::NanStdEuclidean && sigma.size() != x.cols())
    throw DimensionError("pairwise_distances: sigma length does not match column count");
  std::vector<double> out(queries.size() * candidates.size());
  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (queries.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t blk) {
    const std::size_t end = std::min(queries.size(), (blk + 1) * kBlock);
    for (std::size_t q = blk * kBlock; q < end; ++q) {
      const auto row = x.row(queries[q]);
      double* dst = out.data() + q * candidates.size();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto other = x.row(candidates[c]);
        dst[c] = metric == Metric::NanEuclidean ? nan_euclidean(row, other).value
                                                : nan_std_euclidean(row, other, sigma).value;
      }
    }
  });
  return out;
}

} // namespace knnxkde
