#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "knnxkde/dataset.hpp"
#include "knnxkde/random.hpp"

namespace knnxkde {

enum class Mechanism { FullMcar, Mcar, Mar, Mnar };

Mechanism parse_mechanism(std::string_view name);
std::string_view to_string(Mechanism m) noexcept;

/// Amputation recipe. `miss_col` is used by the single-column mechanisms,
/// `cond_col` by MAR only.
struct ScenarioSpec {
  Mechanism mechanism = Mechanism::FullMcar;
  double rate = 0.2;
  std::size_t miss_col = 0;
  std::optional<std::size_t> cond_col;

  /// Throws std::invalid_argument on a bad rate, out-of-range column, a MAR
  /// spec without cond_col or with cond_col == miss_col, and rate > 0.5 for
  /// MAR/MNAR.
  void validate(std::size_t cols) const;
};

/// Observation mask: 1 = observed, 0 = missing, row-major.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<unsigned char> observed;

  bool is_observed(std::size_t i, std::size_t j) const noexcept { return observed[i * cols + j] != 0; }
  std::size_t missing_count() const noexcept;
};

/// Every cell independently missing with probability `rate`; a row left
/// with no observed cell has its whole mask redrawn.
Mask ampute_full_mcar(const DataMatrix& x, double rate, Rng& rng);

/// Cells of `miss_col` independently missing with probability `rate`.
Mask ampute_mcar(const DataMatrix& x, double rate, std::size_t miss_col, Rng& rng);

/// Rows whose `cond_col` value is at or above that column's median lose
/// `miss_col` with probability 2 * rate; the others never do. Expected
/// missing fraction in `miss_col` is `rate`. Requires rate <= 0.5.
Mask ampute_mar(const DataMatrix& x, double rate, std::size_t miss_col, std::size_t cond_col, Rng& rng);

/// Like MAR but conditioned on `miss_col` itself.
Mask ampute_mnar(const DataMatrix& x, double rate, std::size_t miss_col, Rng& rng);

Mask ampute(const DataMatrix& x, const ScenarioSpec& spec, Rng& rng);

/// Copy of `x` with masked cells set missing. Shapes must agree.
DataMatrix apply_mask(const DataMatrix& x, const Mask& mask);

/// 0/1 CSV with the data's header.
std::string mask_to_csv(const Mask& mask, const std::vector<std::string>& names);

} // namespace knnxkde
