#include "knnxkde/missingness.hpp"
#include "knnxkde/errors.hpp"

#include <algorithm>
#include <sstream>

namespace knnxkde {

Mechanism parse_mechanism(std::string_view name) {
  if (name == "full_mcar" || name == "FullMCAR" || name == "full-mcar") return Mechanism::FullMcar;
  if (name == "mcar" || name == "MCAR") return Mechanism::Mcar;
  if (name == "mar" || name == "MAR") return Mechanism::Mar;
  if (name == "mnar" || name == "MNAR") return Mechanism::Mnar;
  throw std::invalid_argument("unknown missingness mechanism '" + std::string(name) +
                              "' (expected full_mcar, mcar, mar, mnar)");
}

std::string_view to_string(Mechanism m) noexcept {
  switch (m) {
  case Mechanism::FullMcar: return "full_mcar";
  case Mechanism::Mcar: return "mcar";
  case Mechanism::Mar: return "mar";
  case Mechanism::Mnar: return "mnar";
  }
  return "full_mcar";
}

void ScenarioSpec::validate(std::size_t cols) const {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("missing rate must lie in [0, 1)");
  if (mechanism == Mechanism::FullMcar) return;
  if (miss_col >= cols) throw std::invalid_argument("miss_col " + std::to_string(miss_col) + " out of range");
  if (mechanism == Mechanism::Mar) {
    if (!cond_col) throw std::invalid_argument("MAR requires a conditioning column (cond_col)");
    if (*cond_col >= cols) throw std::invalid_argument("cond_col " + std::to_string(*cond_col) + " out of range");
    if (*cond_col == miss_col) throw std::invalid_argument("cond_col must differ from miss_col");
  }
  if ((mechanism == Mechanism::Mar || mechanism == Mechanism::Mnar) && rate > 0.5)
    throw std::invalid_argument("MAR/MNAR rates must be <= 0.5 (got " + format_double(rate) + ")");
}

std::size_t Mask::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), 0));
}

namespace {

Mask full_mask(const DataMatrix& x) { return {x.rows(), x.cols(), std::vector<unsigned char>(x.rows() * x.cols(), 1)}; }

void require_complete(const DataMatrix& x) {
  if (!x.complete()) throw std::invalid_argument("amputation expects a complete matrix");
}

void require_column_survives(const Mask& m, std::size_t col) {
  for (std::size_t i = 0; i < m.rows; ++i)
    if (m.is_observed(i, col)) return;
  throw std::runtime_error("amputation removed every value of column " + std::to_string(col));
}

double column_median(const DataMatrix& x, std::size_t col) {
  std::vector<double> v(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) v[i] = x(i, col);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Mask median_split(const DataMatrix& x, double rate, std::size_t miss_col, std::size_t cond_col, Rng& rng) {
  Mask m = full_mask(x);
  const double med = column_median(x, cond_col);
  const double p_upper = std::clamp(2.0 * rate, 0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double draw = u(rng); // consumed for every row to keep streams aligned
    if (x(i, cond_col) >= med && draw < p_upper) m.observed[i * m.cols + miss_col] = 0;
  }
  if (x.rows() > 0) require_column_survives(m, miss_col);
  return m;
}

} // namespace

Mask ampute_full_mcar(const DataMatrix& x, double rate, Rng& rng) {
  require_complete(x);
  ScenarioSpec{Mechanism::FullMcar, rate, 0, std::nullopt}.validate(x.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t d = x.cols();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Mask m = full_mask(x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      unsigned char* row = m.observed.data() + i * d;
      for (;;) {
        std::size_t kept = 0;
        for (std::size_t j = 0; j < d; ++j) {
          row[j] = u(rng) < rate ? 0 : 1;
          kept += row[j];
        }
        if (kept > 0) break;
      }
    }
    bool columns_ok = true;
    for (std::size_t j = 0; j < d && x.rows() > 0; ++j) {
      bool any = false;
      for (std::size_t i = 0; i < x.rows() && !any; ++i) any = m.is_observed(i, j);
      columns_ok = columns_ok && any;
    }
    if (columns_ok) return m;
  }
  throw std::runtime_error("full MCAR amputation kept leaving a column without observed values");
}

Mask ampute_mcar(const DataMatrix& x, double rate, std::size_t miss_col, Rng& rng) {
  require_complete(x);
  ScenarioSpec{Mechanism::Mcar, rate, miss_col, std::nullopt}.validate(x.cols());
  Mask m = full_mask(x);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (u(rng) < rate) m.observed[i * m.cols + miss_col] = 0;
  if (x.rows() > 0) require_column_survives(m, miss_col);
  return m;
}

Mask ampute_mar(const DataMatrix& x, double rate, std::size_t miss_col, std::size_t cond_col, Rng& rng) {
  require_complete(x);
  ScenarioSpec{Mechanism::Mar, rate, miss_col, cond_col}.validate(x.cols());
  return median_split(x, rate, miss_col, cond_col, rng);
}

Mask ampute_mnar(const DataMatrix& x, double rate, std::size_t miss_col, Rng& rng) {
  require_complete(x);
  ScenarioSpec{Mechanism::Mnar, rate, miss_col, std::nullopt}.validate(x.cols());
  return median_split(x, rate, miss_col, miss_col, rng);
}

Mask ampute(const DataMatrix& x, const ScenarioSpec& spec, Rng& rng) {
  spec.validate(x.cols());
  switch (spec.mechanism) {
  case Mechanism::FullMcar: return ampute_full_mcar(x, spec.rate, rng);
  case Mechanism::Mcar: return ampute_mcar(x, spec.rate, spec.miss_col, rng);
  case Mechanism::Mar: return ampute_mar(x, spec.rate, spec.miss_col, *spec.cond_col, rng);
  case Mechanism::Mnar: return ampute_mnar(x, spec.rate, spec.miss_col, rng);
  }
  throw std::logic_error("unhandled mechanism");
}

DataMatrix apply_mask(const DataMatrix& x, const Mask& mask) {
  if (mask.rows != x.rows() || mask.cols != x.cols()) throw DimensionError("mask shape does not match the data");
  DataMatrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (!mask.is_observed(i, j)) out(i, j) = kMissing;
  return out;
}

std::string mask_to_csv(const Mask& mask, const std::vector<std::string>& names) {
  std::ostringstream out;
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (std::size_t i = 0; i < mask.rows; ++i) {
    for (std::size_t j = 0; j < mask.cols; ++j) out << (j ? "," : "") << (mask.is_observed(i, j) ? '1' : '0');
    out << '\n';
  }
  return out.str();
}

} // namespace knnxkde
