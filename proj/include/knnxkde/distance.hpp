#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "knnxkde/dataset.hpp"

namespace knnxkde {

struct RowPairDistance {
  double value = 0.0;        // >= 0, +inf when nothing is commonly observed
  std::size_t n_common = 0;  // features observed in both rows
};

/// Euclidean distance over commonly observed features, rescaled by
/// D / |common|. Returns +inf with n_common = 0 when the rows share no
/// observed feature.
RowPairDistance nan_euclidean(std::span<const double> a, std::span<const double> b);

/// Euclidean distance over commonly observed features plus sigma_k^2 for
/// every feature missing in at least one of the two rows. Rows with more
/// missing cells are pushed further away instead of closer.
RowPairDistance nan_std_euclidean(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> sigma);

enum class Metric { NanEuclidean, NanStdEuclidean };

/// Row-major |queries| x |candidates| distance matrix between rows of `x`.
/// `sigma` is only read for NanStdEuclidean. Row blocks are computed
/// concurrently on `threads` workers.
std::vector<double> pairwise_distances(const DataMatrix& x, std::span<const std::size_t> queries,
                                       std::span<const std::size_t> candidates, Metric metric,
                                       std::span<const double> sigma = {}, std::size_t threads = 1);

} // namespace knnxkde
