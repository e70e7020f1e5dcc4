#include "knnxkde/dataset.hpp"
#include "knnxkde/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace knnxkde {

namespace {

std::vector<std::string> default_names(std::size_t cols) {
  std::vector<std::string> names;
  names.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

// RFC-4180 record splitter. Quoted fields may contain commas, doubled quotes
// and line breaks; `pos` advances past the record terminator.
bool next_record(const std::string& text, std::size_t& pos, std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field += '"';
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      field += c;
      ++pos;
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
      ++pos;
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
      ++pos;
      continue;
    }
    if (c == '\r' || c == '\n') {
      ++pos;
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      break;
    }
    field += c;
    ++pos;
  }
  if (quoted) throw ParseError("unterminated quoted field");
  fields.push_back(std::move(field));
  return true;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

void require_same_cols(const DataMatrix& x, const NormalizationParams& p) {
  if (p.min.size() != x.cols() || p.max.size() != x.cols())
    throw DimensionError("normalization parameters have " + std::to_string(p.min.size()) +
                         " columns, matrix has " + std::to_string(x.cols()));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std_of(const std::vector<double>& v, double mean) {
  if (v.empty()) return 0.0;
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

} // namespace

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       std::vector<std::string> column_names)
    : rows_(rows), cols_(cols), values_(std::move(values)), names_(std::move(column_names)) {
  if (cols_ < 2) throw DimensionError("a data matrix needs at least 2 columns, got " + std::to_string(cols_));
  if (values_.size() != rows_ * cols_)
    throw DimensionError("expected " + std::to_string(rows_ * cols_) + " values, got " +
                         std::to_string(values_.size()));
  if (names_.empty()) names_ = default_names(cols_);
  if (names_.size() != cols_) throw DimensionError("column name count does not match column count");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double v = values_[k];
    if (!is_missing(v) && !std::isfinite(v))
      throw std::invalid_argument("non-finite value at row " + std::to_string(k / cols_) + ", column " +
                                  std::to_string(k % cols_));
  }
}

DataMatrix DataMatrix::missing_like(std::size_t rows, std::size_t cols, std::vector<std::string> column_names) {
  return DataMatrix(rows, cols, std::vector<double>(rows * cols, kMissing), std::move(column_names));
}

std::vector<unsigned char> DataMatrix::mask() const {
  std::vector<unsigned char> m(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) m[k] = is_missing(values_[k]) ? 0 : 1;
  return m;
}

std::size_t DataMatrix::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), is_missing));
}

std::size_t DataMatrix::observed_count(std::size_t col) const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows_; ++i) n += observed(i, col) ? 1 : 0;
  return n;
}

bool operator==(const DataMatrix& a, const DataMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.names_ != b.names_) return false;
  for (std::size_t k = 0; k < a.values_.size(); ++k) {
    const double u = a.values_[k], v = b.values_[k];
    if (is_missing(u) != is_missing(v)) return false;
    if (!is_missing(u) && u != v) return false;
  }
  return true;
}

DataMatrix parse_csv(const std::string& text, const CsvOptions& options) {
  // Skip a UTF-8 byte-order mark before tokenizing so a quoted first field still parses.
  std::size_t pos = text.rfind("\xEF\xBB\xBF", 0) == 0 ? 3 : 0;
  std::vector<std::string> fields;
  if (!next_record(text, pos, fields)) throw ParseError("empty CSV: a header row is required");
  std::vector<std::string> names;
  for (auto& f : fields) names.push_back(trim(f));
  const std::size_t cols = names.size();
  if (cols < 2) throw DimensionError("CSV has " + std::to_string(cols) + " column(s); at least 2 are required");

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line = 1;
  while (next_record(text, pos, fields)) {
    ++line;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue; // blank line
    if (fields.size() != cols)
      throw ParseError("row " + std::to_string(line) + ": expected " + std::to_string(cols) + " fields, got " +
                       std::to_string(fields.size()));
    for (std::size_t j = 0; j < cols; ++j) {
      const std::string cell = trim(fields[j]);
      if (options.missing_tokens.contains(cell)) {
        values.push_back(kMissing);
        continue;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("row " + std::to_string(line) + ", column " + std::to_string(j + 1) + " ('" + names[j] +
                         "'): cannot parse '" + cell + "' as a real number");
      values.push_back(v);
    }
    ++rows;
  }

  DataMatrix x(rows, cols, std::move(values), std::move(names));
  for (std::size_t j = 0; j < cols; ++j)
    if (x.observed_count(j) == 0)
      throw ParseError("column " + std::to_string(j + 1) + " ('" + x.column_names()[j] +
                       "') has no observed value");
  return x;
}

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_csv(buffer.str(), options);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {
std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}
} // namespace

std::string to_csv(const DataMatrix& x) {
  std::string out;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (j) out += ',';
    out += csv_escape(x.column_names()[j]);
  }
  out += '\n';
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j) out += ',';
      if (x.observed(i, j)) out += format_double(x(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_csv(const DataMatrix& x, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_csv(x);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::pair<DataMatrix, NormalizationParams> normalize(const DataMatrix& x) {
  NormalizationParams p;
  p.min.assign(x.cols(), std::numeric_limits<double>::infinity());
  p.max.assign(x.cols(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (x.observed(i, j)) {
        p.min[j] = std::min(p.min[j], x(i, j));
        p.max[j] = std::max(p.max[j], x(i, j));
      }
  for (std::size_t j = 0; j < x.cols(); ++j)
    if (p.min[j] > p.max[j]) throw std::invalid_argument("column " + std::to_string(j) + " has no observed cell");
  return {apply_normalization(x, p), p};
}

DataMatrix apply_normalization(const DataMatrix& x, const NormalizationParams& p) {
  require_same_cols(x, p);
  DataMatrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!x.observed(i, j)) continue;
      const double range = p.max[j] - p.min[j];
      out(i, j) = range > 0.0 ? (x(i, j) - p.min[j]) / range : 0.0;
    }
  return out;
}

DataMatrix denormalize(const DataMatrix& x, const NormalizationParams& p) {
  require_same_cols(x, p);
  DataMatrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!x.observed(i, j)) continue;
      const double range = p.max[j] - p.min[j];
      out(i, j) = range > 0.0 ? p.min[j] + x(i, j) * range : p.min[j];
    }
  return out;
}

ColumnStats column_stats(const DataMatrix& x) {
  ColumnStats s;
  s.mean.resize(x.cols());
  s.std.resize(x.cols());
  s.observed_count.resize(x.cols());
  std::vector<double> col;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    col.clear();
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (x.observed(i, j)) col.push_back(x(i, j));
    if (col.empty()) throw std::invalid_argument("column " + std::to_string(j) + " has no observed cell");
    s.observed_count[j] = col.size();
    s.mean[j] = mean_of(col);
    s.std[j] = pop_std_of(col, s.mean[j]);
  }
  return s;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 3) return std::nullopt;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

CorrelationSummary correlation_summary(const DataMatrix& x) {
  const std::size_t d = x.cols();
  CorrelationSummary s;
  s.dims = d;
  s.pearson.assign(d * d, std::nullopt);
  s.spearman.assign(d * d, std::nullopt);
  std::vector<double> abs_p, abs_s;
  std::vector<double> a, b;
  for (std::size_t j = 0; j < d; ++j) {
    s.pearson[j * d + j] = 1.0;
    s.spearman[j * d + j] = 1.0;
    for (std::size_t k = j + 1; k < d; ++k) {
      a.clear();
      b.clear();
      for (std::size_t i = 0; i < x.rows(); ++i)
        if (x.observed(i, j) && x.observed(i, k)) {
          a.push_back(x(i, j));
          b.push_back(x(i, k));
        }
      const auto p = pearson(a, b);
      const auto r = a.size() >= 3 ? spearman(a, b) : std::nullopt;
      s.pearson[j * d + k] = s.pearson[k * d + j] = p;
      s.spearman[j * d + k] = s.spearman[k * d + j] = r;
      if (p && r) {
        abs_p.push_back(std::abs(*p));
        abs_s.push_back(std::abs(*r));
      }
    }
  }
  s.defined_pairs = abs_p.size();
  s.pearson_abs_mean = mean_of(abs_p);
  s.pearson_abs_std = pop_std_of(abs_p, s.pearson_abs_mean);
  s.spearman_abs_mean = mean_of(abs_s);
  s.spearman_abs_std = pop_std_of(abs_s, s.spearman_abs_mean);
  return s;
}

nlohmann::json to_json(const ColumnStats& stats, const std::vector<std::string>& names) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t j = 0; j < stats.mean.size(); ++j)
    cols.push_back({{"name", j < names.size() ? names[j] : std::to_string(j)},
                    {"mean", stats.mean[j]},
                    {"std", stats.std[j]},
                    {"observed_count", stats.observed_count[j]}});
  return {{"columns", cols}};
}

nlohmann::json to_json(const CorrelationSummary& s, const std::vector<std::string>& names) {
  auto matrix = [&](const std::vector<std::optional<double>>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < s.dims; ++j) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t k = 0; k < s.dims; ++k) {
        const auto& v = m[j * s.dims + k];
        row.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
      }
      rows.push_back(row);
    }
    return rows;
  };
  return {{"columns", names},
          {"pearson", matrix(s.pearson)},
          {"spearman", matrix(s.spearman)},
          {"pearson_abs", {{"mean", s.pearson_abs_mean}, {"std", s.pearson_abs_std}}},
          {"spearman_abs", {{"mean", s.spearman_abs_mean}, {"std", s.spearman_abs_std}}},
          {"defined_pairs", s.defined_pairs}};
}

} // namespace knnxkde
