#include "knnxkde/benchmark.hpp"
#include "knnxkde/errors.hpp"
#include "knnxkde/parallel.hpp"
#include "knnxkde/synthetic.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace knnxkde {

namespace {

using nlohmann::json;

std::string percent2(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

DatasetSpec parse_dataset(const json& j, const std::filesystem::path& base_dir) {
  DatasetSpec d;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const bool is_gen = std::find(kGeneratorNames.begin(), kGeneratorNames.end(), s) != kGeneratorNames.end();
    if (is_gen) {
      d.name = d.generator = s;
    } else {
      d.path = s;
      d.name = std::filesystem::path(s).stem().string();
    }
  } else {
    d.generator = get_or<std::string>(j, "generator", "");
    if (j.contains("path")) d.path = j.at("path").get<std::string>();
    if (d.generator.empty() == d.path.empty())
      throw ParseError("dataset entries need exactly one of 'generator' or 'path'");
    d.name = get_or<std::string>(j, "name", d.generator.empty() ? d.path.stem().string() : d.generator);
    d.n = get_or<std::size_t>(j, "n", d.n);
    if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("miss_col")) d.miss_col = j.at("miss_col").get<std::size_t>();
    if (j.contains("cond_col")) d.cond_col = j.at("cond_col").get<std::size_t>();
  }
  if (!d.generator.empty()) {
    if (std::find(kGeneratorNames.begin(), kGeneratorNames.end(), d.generator) == kGeneratorNames.end())
      (void)generate(d.generator, 1, 0); // throws with the list of valid names
    if (d.n == 0) throw std::invalid_argument("dataset '" + d.name + "': n must be at least 1");
  } else {
    if (d.path.is_relative() && !base_dir.empty()) d.path = base_dir / d.path;
    if (!std::filesystem::exists(d.path)) throw IoError("dataset file not found: " + d.path.string());
  }
  return d;
}

std::uint64_t rate_key(double rate) { return std::bit_cast<std::uint64_t>(rate); }

struct LoadedDataset {
  DataMatrix data;
  std::uint64_t seed = 0;
  ScenarioSpec base; // columns only
};

} // namespace

const std::vector<double>& BenchmarkConfig::grid_for(MethodId m) const {
  for (const auto& [id, g] : grids)
    if (id == m) return g;
  throw std::logic_error("no grid for method " + std::string(to_string(m)));
}

json BenchmarkConfig::to_json() const {
  json ds = json::array();
  for (const auto& d : datasets) {
    json e{{"name", d.name}};
    if (!d.generator.empty()) {
      e["generator"] = d.generator;
      e["n"] = d.n;
      if (d.seed) e["seed"] = *d.seed;
    } else {
      e["path"] = d.path.string();
    }
    if (d.miss_col) e["miss_col"] = *d.miss_col;
    if (d.cond_col) e["cond_col"] = *d.cond_col;
    ds.push_back(std::move(e));
  }
  json methods_j = json::array(), scen = json::array(), grids_j = json::object();
  for (auto m : methods) methods_j.push_back(std::string(to_string(m)));
  for (auto s : scenarios) scen.push_back(std::string(to_string(s)));
  for (const auto& [m, g] : grids) {
    json arr = json::array();
    for (double v : g) arr.push_back(std::isnan(v) ? json(nullptr) : json(v));
    grids_j[std::string(to_string(m))] = arr;
  }
  return {{"datasets", ds},
          {"methods", methods_j},
          {"scenarios", scen},
          {"rates", rates},
          {"repeats", repeats},
          {"seed", seed},
          {"grids", grids_j},
          {"knnxkde",
           {{"h", settings.h},
            {"n_draws", settings.n_draws},
            {"strategy", std::string(to_string(settings.strategy))},
            {"loglik", std::string(to_string(settings.loglik_mode))}}},
          {"mice",
           {{"n_iters", settings.mice.n_iters},
            {"n_repeats", settings.mice.n_repeats},
            {"add_noise", settings.mice.add_noise}}},
          {"softimpute",
           {{"max_iters", settings.soft.max_iters},
            {"tol", settings.soft.tol},
            {"max_rank", settings.soft.max_rank},
            {"center", settings.soft.center}}},
          {"loglik", loglik},
          {"timing_repeats", timing_repeats},
          {"percent", percent}};
}

BenchmarkConfig parse_benchmark_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("benchmark config must be a JSON object");
  BenchmarkConfig c;
  try {
    for (const auto& d : j.value("datasets", json::array())) c.datasets.push_back(parse_dataset(d, base_dir));
    const json methods = j.value("methods", json{"knnxkde", "knn", "mice", "softimpute", "mean", "median"});
    for (const auto& m : methods) c.methods.push_back(parse_method(m.get<std::string>()));
    const json scen = j.value("scenarios", json{"full_mcar", "mcar", "mar", "mnar"});
    for (const auto& s : scen) c.scenarios.push_back(parse_mechanism(s.get<std::string>()));
    c.rates = j.value("rates", std::vector<double>{0.2});
    c.repeats = j.value("repeats", c.repeats);
    if (j.contains("seed") && !j.at("seed").is_null()) {
      c.seed = j.at("seed").get<std::uint64_t>();
    } else {
      c.seed = entropy_seed();
      c.seed_from_entropy = true;
    }
    const json grids = j.value("grids", json::object());
    for (auto m : c.methods) {
      const std::string key(to_string(m));
      std::vector<double> g = default_grid(m);
      if (has_hyperparameter(m) && grids.contains(key)) g = grids.at(key).get<std::vector<double>>();
      if (g.empty()) throw ParseError("empty grid for method " + key);
      c.grids.emplace_back(m, std::move(g));
    }
    const json kx = j.value("knnxkde", json::object());
    c.settings.h = kx.value("h", c.settings.h);
    c.settings.n_draws = kx.value("n_draws", c.settings.n_draws);
    c.settings.strategy = parse_point_strategy(kx.value("strategy", std::string("mean")));
    c.settings.loglik_mode = parse_loglik_mode(kx.value("loglik", std::string("histogram")));
    const json mi = j.value("mice", json::object());
    c.settings.mice.n_iters = mi.value("n_iters", c.settings.mice.n_iters);
    c.settings.mice.n_repeats = mi.value("n_repeats", c.settings.mice.n_repeats);
    c.settings.mice.add_noise = mi.value("add_noise", c.settings.mice.add_noise);
    const json si = j.value("softimpute", json::object());
    c.settings.soft.max_iters = si.value("max_iters", c.settings.soft.max_iters);
    c.settings.soft.tol = si.value("tol", c.settings.soft.tol);
    c.settings.soft.max_rank = si.value("max_rank", c.settings.soft.max_rank);
    c.settings.soft.center = si.value("center", c.settings.soft.center);
    c.loglik = j.value("loglik", c.loglik);
    c.timing_repeats = j.value("timing_repeats", c.timing_repeats);
    c.percent = j.value("percent", c.percent);
  } catch (const json::exception& e) {
    throw ParseError(std::string("benchmark config: ") + e.what());
  }
  if (c.repeats == 0) throw ParseError("benchmark config: repeats must be at least 1");
  if (c.timing_repeats == 0) throw ParseError("benchmark config: timing_repeats must be at least 1");
  if (!(c.settings.h > 0.0) || c.settings.n_draws == 0) throw ParseError("benchmark config: bad knnxkde settings");
  for (double r : c.rates)
    if (!(r > 0.0 && r < 1.0)) throw ParseError("benchmark config: rates must lie in (0, 1)");
  return c;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config, std::size_t threads) {
  BenchmarkReport report;
  const std::uint64_t master = config.seed;

  // Datasets load up front so a bad file fails before any computation.
  std::vector<LoadedDataset> data;
  json dataset_manifest = json::array();
  for (const auto& d : config.datasets) {
    LoadedDataset ld;
    json e{{"name", d.name}};
    if (!d.generator.empty()) {
      ld.seed = d.seed.value_or(derive_seed(master, {hash_string("generator"), hash_string(d.name)}));
      ld.data = generate(d.generator, d.n, ld.seed);
      e["generator"] = generator_manifest(d.generator, d.n, ld.seed);
    } else {
      ld.data = load_csv(d.path);
      e["path"] = d.path.string();
    }
    const std::size_t cols = ld.data.cols();
    ld.base.miss_col = d.miss_col.value_or(cols - 1);
    ld.base.cond_col = d.cond_col.value_or(0);
    e["rows"] = ld.data.rows();
    e["cols"] = cols;
    e["miss_col"] = ld.base.miss_col;
    e["cond_col"] = *ld.base.cond_col;
    dataset_manifest.push_back(std::move(e));
    data.push_back(std::move(ld));
  }

  // Stage 1: amputations shared by every method.
  struct Combo {
    std::size_t dataset, scenario, rate;
    std::vector<PreparedTrial> trials;
    std::vector<std::uint64_t> seeds;
    std::string error;
  };
  std::vector<Combo> combos;
  for (std::size_t d = 0; d < data.size(); ++d)
    for (std::size_t s = 0; s < config.scenarios.size(); ++s)
      for (std::size_t r = 0; r < config.rates.size(); ++r) combos.push_back({d, s, r, {}, {}, {}});

  parallel_for(combos.size(), threads, [&](std::size_t ci) {
    Combo& c = combos[ci];
    ScenarioSpec spec = data[c.dataset].base;
    spec.mechanism = config.scenarios[c.scenario];
    spec.rate = config.rates[c.rate];
    const auto& name = config.datasets[c.dataset].name;
    try {
      for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        const auto seed = derive_seed(master, {hash_string(name), static_cast<std::uint64_t>(spec.mechanism),
                                               rate_key(spec.rate), rep});
        c.seeds.push_back(seed);
        c.trials.push_back(prepare_trial(data[c.dataset].data, spec, seed));
      }
    } catch (const std::exception& e) {
      c.error = e.what();
      c.trials.clear();
    }
  });

  // Stage 2: one task per (combination, method).
  struct Task {
    std::size_t combo, method;
    std::vector<ScoreRecord> records;
    std::vector<GridRecord> grid;
    std::optional<Failure> failure;
    std::uint64_t seed = 0;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0; ci < combos.size(); ++ci)
    for (std::size_t m = 0; m < config.methods.size(); ++m) tasks.push_back({ci, m, {}, {}, {}, 0});

  MethodSettings inner = config.settings;
  inner.threads = 1;
  parallel_for(tasks.size(), threads, [&](std::size_t ti) {
    Task& t = tasks[ti];
    const Combo& c = combos[t.combo];
    const MethodId method = config.methods[t.method];
    const std::string dname = config.datasets[c.dataset].name;
    const std::string scen(to_string(config.scenarios[c.scenario]));
    const double rate = config.rates[c.rate];
    const std::string mname(to_string(method));
    auto fail = [&](std::string msg) { t.failure = Failure{dname, mname, scen, rate, std::move(msg)}; };
    if (!c.error.empty()) return fail("amputation failed: " + c.error);
    t.seed = derive_seed(master, {hash_string(dname), static_cast<std::uint64_t>(config.scenarios[c.scenario]),
                                  rate_key(rate), hash_string(mname)});
    try {
      const auto& grid = config.grid_for(method);
      const GridSearchResult gs = grid_search(method, grid, c.trials, inner, t.seed, 1);
      for (std::size_t gi = 0; gi < gs.table.size(); ++gi)
        t.grid.push_back({dname, mname, scen, rate, gs.table[gi], gi == gs.best_index});
      const auto& best = gs.table[gs.best_index];
      if (best.failed) return fail("every grid point failed: " + best.error);
      for (std::size_t rep = 0; rep < c.trials.size(); ++rep) {
        const auto seed = derive_seed(t.seed, {rep});
        const MethodRun run = run_method(method, gs.best_value, c.trials[rep], inner, seed, config.loglik);
        double seconds = run.wall_clock_s;
        for (std::size_t k = 1; k < config.timing_repeats; ++k)
          seconds += run_method(method, gs.best_value, c.trials[rep], inner, seed, false).wall_clock_s;
        ScoreRecord rec;
        rec.dataset = dname;
        rec.method = mname;
        rec.scenario = scen;
        rec.rate = rate;
        rec.repeat = rep;
        if (has_hyperparameter(method)) rec.hyperparameter = gs.best_value;
        rec.nrmse = nrmse(c.trials[rep].truth_norm, run.imputed, c.trials[rep].mask);
        rec.mean_loglik = run.mean_loglik;
        rec.wall_clock_s = seconds / static_cast<double>(config.timing_repeats);
        rec.fallback_count = run.fallback_count;
        t.records.push_back(std::move(rec));
      }
    } catch (const std::exception& e) {
      t.records.clear();
      fail(e.what());
    }
  });

  // Deterministic merge: dataset, method, scenario, rate, repeat in config order.
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t ti) {
    const Combo& c = combos[tasks[ti].combo];
    return std::tuple(c.dataset, tasks[ti].method, c.scenario, c.rate);
  };
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); });
  for (std::size_t ti : order) {
    auto& t = tasks[ti];
    for (auto& r : t.records) report.records.push_back(std::move(r));
    for (auto& g : t.grid) report.grid.push_back(std::move(g));
    if (t.failure) report.failures.push_back(std::move(*t.failure));
  }

  // Ranks per (scenario, rate) over datasets.
  for (std::size_t s = 0; s < config.scenarios.size(); ++s)
    for (std::size_t r = 0; r < config.rates.size(); ++r) {
      const std::string scen(to_string(config.scenarios[s]));
      const double rate = config.rates[r];
      for (int metric = 0; metric < 2; ++metric) {
        if (metric == 1 && !config.loglik) continue;
        std::vector<MethodScore> scores;
        for (const auto& d : config.datasets)
          for (auto m : config.methods) {
            if (metric == 1 && !has_loglik(m)) continue;
            const std::string mname(to_string(m));
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& rec : report.records)
              if (rec.dataset == d.name && rec.method == mname && rec.scenario == scen && rec.rate == rate) {
                const double v = metric == 0 ? rec.nrmse : rec.mean_loglik.value_or(std::nan(""));
                sum += v;
                ++n;
              }
            std::optional<double> score;
            if (n) score = sum / static_cast<double>(n);
            scores.push_back({d.name, mname, score});
          }
        if (scores.empty()) continue;
        const auto summary = rank_methods(scores, metric == 0);
        for (const auto& e : summary.entries)
          report.ranks.push_back({scen, rate, metric == 0 ? "nrmse" : "loglik", e});
        for (const auto& note : summary.notes)
          report.rank_notes.push_back(scen + " " + format_double(rate) + " " + (metric == 0 ? "nrmse" : "loglik") +
                                      ": " + note);
      }
    }

  json trial_seeds = json::array();
  for (const auto& c : combos)
    trial_seeds.push_back({{"dataset", config.datasets[c.dataset].name},
                           {"scenario", std::string(to_string(config.scenarios[c.scenario]))},
                           {"rate", config.rates[c.rate]},
                           {"seeds", c.seeds}});
  json method_seeds = json::array();
  for (std::size_t ti : order) {
    const auto& t = tasks[ti];
    const auto& c = combos[t.combo];
    method_seeds.push_back({{"dataset", config.datasets[c.dataset].name},
                            {"method", std::string(to_string(config.methods[t.method]))},
                            {"scenario", std::string(to_string(config.scenarios[c.scenario]))},
                            {"rate", config.rates[c.rate]},
                            {"seed", t.seed}});
  }
  json failures = json::array();
  for (const auto& f : report.failures)
    failures.push_back(
        {{"dataset", f.dataset}, {"method", f.method}, {"scenario", f.scenario}, {"rate", f.rate}, {"error", f.error}});

  report.manifest = {{"config", config.to_json()},
                     {"seed", master},
                     {"seed_source", config.seed_from_entropy ? "entropy" : "config"},
                     {"rng", "mt19937_64 with splitmix64 stream derivation"},
                     {"datasets", dataset_manifest},
                     {"trial_seeds", trial_seeds},
                     {"method_seeds", method_seeds},
                     {"failures", failures},
                     {"rank_notes", report.rank_notes},
                     {"record_count", report.records.size()},
                     {"versions",
                      {{"knnxkde", kLibraryVersion},
                       {"compiler", __VERSION__},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
  return report;
}

std::string scores_to_csv(const BenchmarkReport& report, bool include_timing, bool percent) {
  std::ostringstream out;
  out << "dataset,method,scenario,rate,repeat,hyperparameter,nrmse,mean_loglik,fallback_count";
  if (include_timing) out << ",wall_clock_s";
  out << '\n';
  for (const auto& r : report.records) {
    out << r.dataset << ',' << r.method << ',' << r.scenario << ',' << format_double(r.rate) << ',' << r.repeat << ','
        << opt_number(r.hyperparameter) << ',' << (percent ? percent2(r.nrmse) : format_double(r.nrmse)) << ','
        << opt_number(r.mean_loglik) << ',' << r.fallback_count;
    if (include_timing) out << ',' << format_double(r.wall_clock_s);
    out << '\n';
  }
  return out.str();
}

std::string grid_to_csv(const BenchmarkReport& report, bool percent) {
  std::ostringstream out;
  out << "dataset,method,scenario,rate,value,mean_nrmse,std_nrmse,fallback_count,selected,error\n";
  for (const auto& g : report.grid) {
    const auto& p = g.point;
    auto num = [&](double v) {
      if (!std::isfinite(v)) return std::string();
      return percent ? percent2(v) : format_double(v);
    };
    std::string err = p.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out << g.dataset << ',' << g.method << ',' << g.scenario << ',' << format_double(g.rate) << ','
        << (std::isnan(p.value) ? std::string() : format_double(p.value)) << ',' << num(p.mean_nrmse) << ','
        << num(p.std_nrmse) << ',' << p.fallback_count << ',' << (g.selected ? 1 : 0) << ','
        << (err.empty() ? std::string() : '"' + err + '"') << '\n';
  }
  return out.str();
}

std::string ranks_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "scenario,rate,metric,method,mean_rank,std_rank,datasets\n";
  for (const auto& r : report.ranks)
    out << r.scenario << ',' << format_double(r.rate) << ',' << r.metric << ',' << r.entry.method << ','
        << (std::isnan(r.entry.mean_rank) ? std::string() : format_double(r.entry.mean_rank)) << ','
        << (std::isnan(r.entry.std_rank) ? std::string() : format_double(r.entry.std_rank)) << ','
        << r.entry.datasets << '\n';
  return out.str();
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& out_dir, bool percent) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const auto p = out_dir / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    f << text;
    if (!f) throw IoError("failed writing " + p.string());
  };
  write("scores.csv", scores_to_csv(report, true, percent));
  write("grid.csv", grid_to_csv(report, percent));
  write("ranks.csv", ranks_to_csv(report));
  write("manifest.json", report.manifest.dump(2) + "\n");
}

} // namespace knnxkde
