#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace knnxkde {

/// In-memory marker for a missing cell. Quiet NaN never collides with a
/// valid datum because observed cells are required to be finite.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// N x D table of reals, row-major, with missing cells stored as kMissing.
///
/// Invariants enforced at construction: D >= 2, every non-missing cell is
/// finite, and there is one name per column.
class DataMatrix {
public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
             std::vector<std::string> column_names = {});

  /// Matrix with every cell missing. Intended as a buffer to fill.
  static DataMatrix missing_like(std::size_t rows, std::size_t cols,
                                 std::vector<std::string> column_names = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }

  bool observed(std::size_t i, std::size_t j) const noexcept { return !is_missing((*this)(i, j)); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  /// m_ij = 1 iff (i, j) is observed, row-major.
  std::vector<unsigned char> mask() const;

  std::size_t missing_count() const noexcept;
  std::size_t observed_count(std::size_t col) const noexcept;
  bool complete() const noexcept { return missing_count() == 0; }

  friend bool operator==(const DataMatrix& a, const DataMatrix& b);

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<std::string> names_;
};

/// Per-column min/max over observed cells, kept so normalization can be
/// inverted.
struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> max;
};

struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> std; // population, observed cells only
  std::vector<std::size_t> observed_count;
};

struct CorrelationSummary {
  std::size_t dims = 0;
  // Row-major dims x dims; std::nullopt where fewer than 3 pairwise-complete
  // rows exist or a column is constant on them.
  std::vector<std::optional<double>> pearson;
  std::vector<std::optional<double>> spearman;
  double pearson_abs_mean = 0.0;
  double pearson_abs_std = 0.0;
  double spearman_abs_mean = 0.0;
  double spearman_abs_std = 0.0;
  std::size_t defined_pairs = 0;
};

struct CsvOptions {
  std::set<std::string> missing_tokens{"", "NaN", "nan", "NA"};
};

/// Parse a header-first CSV of reals. Throws ParseError naming row and
/// column on a bad cell, DimensionError for fewer than 2 columns, and
/// ParseError for a column without any observed value.
DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
DataMatrix parse_csv(const std::string& text, const CsvOptions& options = {});

/// Full-precision CSV; missing cells become empty fields.
void save_csv(const DataMatrix& x, const std::filesystem::path& path);
std::string to_csv(const DataMatrix& x);

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

/// Min-max map of every observed cell into [0, 1]. Constant columns map to 0
/// and keep the constant as both min and max.
std::pair<DataMatrix, NormalizationParams> normalize(const DataMatrix& x);

/// Apply existing parameters (e.g. to map a ground truth onto the scale of
/// the matrix it was amputed into).
DataMatrix apply_normalization(const DataMatrix& x, const NormalizationParams& params);

DataMatrix denormalize(const DataMatrix& x, const NormalizationParams& params);

ColumnStats column_stats(const DataMatrix& x);

CorrelationSummary correlation_summary(const DataMatrix& x);

/// Pearson correlation of two equal-length samples; nullopt when either is
/// constant or fewer than 3 points are supplied.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Pearson over average ranks (ties share the mean rank).
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

/// Average ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> v);

nlohmann::json to_json(const ColumnStats& stats, const std::vector<std::string>& names);
nlohmann::json to_json(const CorrelationSummary& summary, const std::vector<std::string>& names);

} // namespace knnxkde
