#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "knnxkde/evaluation.hpp"
#include "knnxkde/missingness.hpp"

namespace knnxkde {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// A dataset is either a generator call or a CSV path. Column defaults:
/// miss_col = last column, cond_col = 0.
struct DatasetSpec {
  std::string name;
  std::string generator; // empty for CSV datasets
  std::size_t n = 500;
  std::optional<std::uint64_t> seed;
  std::filesystem::path path;
  std::optional<std::size_t> miss_col;
  std::optional<std::size_t> cond_col;
};

struct BenchmarkConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<MethodId> methods;
  std::vector<Mechanism> scenarios;
  std::vector<double> rates;
  std::size_t repeats = 20;
  std::uint64_t seed = 0;
  bool seed_from_entropy = false;
  std::vector<std::pair<MethodId, std::vector<double>>> grids;
  MethodSettings settings;
  bool loglik = true;
  std::size_t timing_repeats = 3;
  bool percent = false;

  const std::vector<double>& grid_for(MethodId m) const;
  nlohmann::json to_json() const;
};

/// Fills defaults for absent keys. Relative dataset paths resolve against
/// `base_dir`. Throws ParseError on malformed values, NotImplemented for
/// gain/missforest and IoError naming the path when a CSV is missing.
BenchmarkConfig parse_benchmark_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct ScoreRecord {
  std::string dataset;
  std::string method;
  std::string scenario;
  double rate = 0.0;
  std::size_t repeat = 0;
  std::optional<double> hyperparameter;
  double nrmse = 0.0;
  std::optional<double> mean_loglik;
  double wall_clock_s = 0.0;
  std::size_t fallback_count = 0;
};

struct GridRecord {
  std::string dataset;
  std::string method;
  std::string scenario;
  double rate = 0.0;
  GridPointResult point;
  bool selected = false;
};

struct RankRecord {
  std::string scenario;
  double rate = 0.0;
  std::string metric; // nrmse or loglik
  RankEntry entry;
};

struct Failure {
  std::string dataset;
  std::string method;
  std::string scenario;
  double rate = 0.0;
  std::string error;
};

struct BenchmarkReport {
  std::vector<ScoreRecord> records; // sorted by dataset, method, scenario, rate, repeat in config order
  std::vector<GridRecord> grid;
  std::vector<RankRecord> ranks;
  std::vector<std::string> rank_notes;
  std::vector<Failure> failures;
  nlohmann::json manifest;
};

/// Every (dataset, scenario, rate) gets `repeats` amputations shared by all
/// methods. Each method is grid searched on mean NRMSE, then rerun at the
/// selected value for likelihood and timing. Combinations run on `threads`
/// workers; output does not depend on the thread count except timing.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, std::size_t threads = 1);

std::string scores_to_csv(const BenchmarkReport& report, bool include_timing = true, bool percent = false);
std::string grid_to_csv(const BenchmarkReport& report, bool percent = false);
std::string ranks_to_csv(const BenchmarkReport& report);

/// scores.csv, grid.csv, ranks.csv and manifest.json under `out_dir`.
void write_report(const BenchmarkReport& report, const std::filesystem::path& out_dir, bool percent = false);

} // namespace knnxkde
