// knnxkde command-line tool: generate, ampute, impute, benchmark, stats.
// Talks to the library only through the C interface.
#include "knnxkde/knnxkde.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

struct Failure {
  int code;
  std::string message;
};

// Usage-type errors exit 2, everything else 1.
void check(kxk_status s) {
  if (s == KXK_OK) return;
  const int code = (s == KXK_ERR_INVALID_ARGUMENT || s == KXK_ERR_NOT_IMPLEMENTED) ? 2 : 1;
  throw Failure{code, std::string(kxk_status_name(s)) + ": " + kxk_last_error()};
}

struct Matrix {
  kxk_matrix* p = nullptr;
  ~Matrix() { kxk_matrix_free(p); }
};

struct CString {
  char* p = nullptr;
  ~CString() { kxk_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Failure{1, "cannot read config " + path};
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Failure{2, "config " + path + " is not valid JSON: " + e.what()};
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure{1, "cannot write " + path};
  f << text;
  if (!f) throw Failure{1, "failed writing " + path};
}

// Flags win; config fills whatever the command line left unset.
template <class T>
void fill(const json& cfg, const char* key, const CLI::Option* opt, T& var) {
  if (opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
}

std::uint64_t resolve_seed(const json& cfg, const CLI::Option* opt, std::uint64_t flag_value, bool& from_entropy) {
  from_entropy = false;
  if (opt->count()) return flag_value;
  if (cfg.contains("seed") && !cfg.at("seed").is_null()) return cfg.at("seed").get<std::uint64_t>();
  from_entropy = true;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json base_manifest(const std::string& command, json resolved, std::uint64_t seed, bool from_entropy) {
  resolved["seed"] = seed;
  return {{"command", command},
          {"version", kxk_version()},
          {"seed_source", from_entropy ? "entropy" : "given"},
          {"resolved_config", std::move(resolved)}};
}

std::string manifest_path_for(const std::string& out) { return out + ".manifest.json"; }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"kNN x KDE imputation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t threads = 0;
  std::uint64_t seed_flag = 0;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  std::string gen_name, gen_out;
  std::size_t gen_n = 500;
  auto* gen_name_opt = gen->add_option("--name", gen_name, "2d_linear | 2d_sine | 2d_ring | gaussians");
  auto* gen_n_opt = gen->add_option("--n", gen_n, "Row count");
  auto* gen_out_opt = gen->add_option("--out,-o", gen_out, "Output CSV");
  auto* gen_seed_opt = gen->add_option("--seed", seed_flag, "RNG seed (default: entropy)");
  gen->add_option("--config", config_path, "JSON config; flags override");

  // ampute
  auto* amp = app.add_subcommand("ampute", "Inject missing values into a complete CSV");
  std::string amp_in, amp_out, amp_mask, amp_mech = "full_mcar";
  double amp_rate = 0.2;
  long long amp_miss = -1, amp_cond = -1;
  auto* amp_in_opt = amp->add_option("--input,-i", amp_in, "Complete input CSV");
  auto* amp_out_opt = amp->add_option("--out,-o", amp_out, "Amputed output CSV");
  auto* amp_mask_opt = amp->add_option("--mask-out", amp_mask, "0/1 mask CSV (1 = observed)");
  auto* amp_mech_opt = amp->add_option("--mechanism", amp_mech, "full_mcar | mcar | mar | mnar");
  auto* amp_rate_opt = amp->add_option("--rate", amp_rate, "Missing rate");
  auto* amp_miss_opt = amp->add_option("--miss-col", amp_miss, "Masked column (default: last)");
  auto* amp_cond_opt = amp->add_option("--cond-col", amp_cond, "Conditioning column (MAR)");
  auto* amp_seed_opt = amp->add_option("--seed", seed_flag, "RNG seed (default: entropy)");
  amp->add_option("--config", config_path, "JSON config; flags override");

  // impute
  auto* imp = app.add_subcommand("impute", "Fill missing cells of a CSV");
  std::string imp_in, imp_out, imp_method = "knnxkde", imp_strategy = "mean";
  double imp_inv_tau = 50.0, imp_h = 0.03, imp_param = 0.0;
  std::size_t imp_draws = 10000;
  bool imp_emit = false;
  auto* imp_in_opt = imp->add_option("--input,-i", imp_in, "CSV with missing cells");
  auto* imp_out_opt = imp->add_option("--out,-o", imp_out, "Completed CSV");
  auto* imp_method_opt = imp->add_option("--method", imp_method, "knnxkde | knn | mice | softimpute | mean | median");
  auto* imp_tau_opt = imp->add_option("--inverse-tau", imp_inv_tau, "kNN x KDE softmax inverse temperature");
  auto* imp_h_opt = imp->add_option("--bandwidth", imp_h, "kNN x KDE kernel bandwidth h");
  auto* imp_draws_opt = imp->add_option("--n-draws", imp_draws, "Samples per incomplete row");
  auto* imp_strategy_opt = imp->add_option("--strategy", imp_strategy, "mean | median | mode | sample | sample_mean");
  auto* imp_param_opt = imp->add_option("--param", imp_param, "k for knn, lambda for softimpute");
  auto* imp_emit_opt = imp->add_flag("--emit-distributions", imp_emit,
                                     "Also write <out>.distributions.json and <out>.samples.csv");
  auto* imp_seed_opt = imp->add_option("--seed", seed_flag, "RNG seed (default: entropy)");
  imp->add_option("--threads", threads, "Worker threads (default: IMPUTE_THREADS or hardware)");
  imp->add_option("--config", config_path, "JSON config; flags override");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run a benchmark described by a JSON config");
  std::string bench_out = "benchmark_out";
  std::size_t bench_repeats = 0;
  bool bench_percent = false;
  bench->add_option("--config", config_path, "Benchmark JSON config")->required();
  auto* bench_out_opt = bench->add_option("--out,-o", bench_out, "Output directory");
  auto* bench_seed_opt = bench->add_option("--seed", seed_flag, "Master seed (overrides config)");
  auto* bench_rep_opt = bench->add_option("--repeats", bench_repeats, "Repeats (overrides config)");
  auto* bench_pct_opt = bench->add_flag("--percent", bench_percent, "Two-decimal percent NRMSE in CSVs");
  bench->add_option("--threads", threads, "Worker threads (default: IMPUTE_THREADS or hardware)");

  // stats
  auto* stats = app.add_subcommand("stats", "Column statistics and correlation summary");
  std::string stats_in, stats_out;
  stats->add_option("--input,-i", stats_in, "Input CSV")->required();
  stats->add_option("--out,-o", stats_out, "Write JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = config_path.empty() ? json::object() : read_json_file(config_path);
    bool entropy = false;

    if (gen->parsed()) {
      fill(cfg, "name", gen_name_opt, gen_name);
      fill(cfg, "n", gen_n_opt, gen_n);
      fill(cfg, "out", gen_out_opt, gen_out);
      if (gen_name.empty()) throw Failure{2, "generate: --name is required (2d_linear, 2d_sine, 2d_ring, gaussians)"};
      if (gen_out.empty()) throw Failure{2, "generate: --out is required"};
      const auto seed = resolve_seed(cfg, gen_seed_opt, seed_flag, entropy);
      Matrix m;
      CString gen_manifest;
      check(kxk_generate(gen_name.c_str(), gen_n, seed, &m.p, &gen_manifest.p));
      check(kxk_matrix_save_csv(m.p, gen_out.c_str()));
      json manifest = base_manifest("generate", {{"name", gen_name}, {"n", gen_n}, {"out", gen_out}}, seed, entropy);
      manifest["generator"] = json::parse(gen_manifest.str());
      write_file(manifest_path_for(gen_out), manifest.dump(2) + "\n");
      return 0;
    }

    if (amp->parsed()) {
      fill(cfg, "input", amp_in_opt, amp_in);
      fill(cfg, "out", amp_out_opt, amp_out);
      fill(cfg, "mask_out", amp_mask_opt, amp_mask);
      fill(cfg, "mechanism", amp_mech_opt, amp_mech);
      fill(cfg, "rate", amp_rate_opt, amp_rate);
      fill(cfg, "miss_col", amp_miss_opt, amp_miss);
      fill(cfg, "cond_col", amp_cond_opt, amp_cond);
      if (amp_in.empty() || amp_out.empty()) throw Failure{2, "ampute: --input and --out are required"};
      if ((amp_mech == "mar" || amp_mech == "MAR") && amp_cond < 0)
        throw Failure{2, "ampute: MAR needs --cond-col"};
      const auto seed = resolve_seed(cfg, amp_seed_opt, seed_flag, entropy);
      Matrix in, out;
      check(kxk_matrix_load_csv(amp_in.c_str(), &in.p));
      if (amp_miss < 0) amp_miss = static_cast<long long>(kxk_matrix_cols(in.p)) - 1;
      kxk_scenario sc{amp_mech.c_str(), amp_rate, amp_miss, amp_cond};
      CString mask;
      check(kxk_ampute(in.p, &sc, seed, &out.p, amp_mask.empty() ? nullptr : &mask.p));
      check(kxk_matrix_save_csv(out.p, amp_out.c_str()));
      if (!amp_mask.empty()) write_file(amp_mask, mask.str());
      json resolved{{"input", amp_in}, {"out", amp_out},         {"mask_out", amp_mask},
                    {"mechanism", amp_mech}, {"rate", amp_rate}, {"miss_col", amp_miss},
                    {"cond_col", amp_cond < 0 ? json(nullptr) : json(amp_cond)}};
      json manifest = base_manifest("ampute", resolved, seed, entropy);
      manifest["missing_cells"] = kxk_matrix_missing_count(out.p);
      write_file(manifest_path_for(amp_out), manifest.dump(2) + "\n");
      return 0;
    }

    if (imp->parsed()) {
      fill(cfg, "input", imp_in_opt, imp_in);
      fill(cfg, "out", imp_out_opt, imp_out);
      fill(cfg, "method", imp_method_opt, imp_method);
      fill(cfg, "inverse_tau", imp_tau_opt, imp_inv_tau);
      fill(cfg, "h", imp_h_opt, imp_h);
      fill(cfg, "n_draws", imp_draws_opt, imp_draws);
      fill(cfg, "strategy", imp_strategy_opt, imp_strategy);
      fill(cfg, "param", imp_param_opt, imp_param);
      fill(cfg, "emit_distributions", imp_emit_opt, imp_emit);
      if (threads == 0 && cfg.contains("threads")) threads = cfg.at("threads").get<std::size_t>();
      if (imp_in.empty() || imp_out.empty()) throw Failure{2, "impute: --input and --out are required"};
      const auto seed = resolve_seed(cfg, imp_seed_opt, seed_flag, entropy);
      Matrix in;
      check(kxk_matrix_load_csv(imp_in.c_str(), &in.p));
      json resolved{{"input", imp_in}, {"out", imp_out}, {"method", imp_method}, {"threads", threads}};
      json manifest;
      if (imp_method == "knnxkde") {
        kxk_impute_options o;
        kxk_impute_options_init(&o);
        o.inverse_tau = imp_inv_tau;
        o.h = imp_h;
        o.n_draws = imp_draws;
        o.strategy = imp_strategy.c_str();
        o.seed = seed;
        o.threads = threads;
        o.retain_samples = imp_emit ? 1 : 0;
        kxk_imputation* result = nullptr;
        check(kxk_impute(in.p, &o, &result));
        std::unique_ptr<kxk_imputation, void (*)(kxk_imputation*)> guard(result, kxk_imputation_free);
        check(kxk_matrix_save_csv(kxk_imputation_matrix(result), imp_out.c_str()));
        if (imp_emit) {
          CString dist;
          check(kxk_imputation_distributions_json(result, &dist.p));
          write_file(imp_out + ".distributions.json", dist.str() + "\n");
          check(kxk_imputation_write_samples_csv(result, (imp_out + ".samples.csv").c_str()));
        }
        resolved.update({{"inverse_tau", imp_inv_tau},
                         {"h", imp_h},
                         {"n_draws", imp_draws},
                         {"strategy", imp_strategy},
                         {"emit_distributions", imp_emit}});
        manifest = base_manifest("impute", resolved, seed, entropy);
        manifest["fallback_count"] = kxk_imputation_fallback_count(result);
      } else {
        if ((imp_method == "knn" || imp_method == "softimpute") && imp_param_opt->count() == 0 &&
            !cfg.contains("param"))
          imp_param = imp_method == "knn" ? 5.0 : 1.0;
        Matrix out;
        check(kxk_impute_method(in.p, imp_method.c_str(), imp_param, seed, threads, &out.p));
        check(kxk_matrix_save_csv(out.p, imp_out.c_str()));
        resolved["param"] = imp_param;
        manifest = base_manifest("impute", resolved, seed, entropy);
      }
      write_file(manifest_path_for(imp_out), manifest.dump(2) + "\n");
      return 0;
    }

    if (bench->parsed()) {
      json bcfg = cfg;
      if (bench_seed_opt->count()) bcfg["seed"] = seed_flag;
      if (bench_rep_opt->count()) bcfg["repeats"] = bench_repeats;
      if (bench_pct_opt->count()) bcfg["percent"] = bench_percent;
      if (bench_out_opt->count() == 0 && cfg.contains("out")) bench_out = cfg.at("out").get<std::string>();
      if (threads == 0 && cfg.contains("threads")) threads = cfg.at("threads").get<std::size_t>();
      const auto base = std::filesystem::absolute(config_path).parent_path().string();
      CString manifest;
      check(kxk_benchmark_run(bcfg.dump().c_str(), base.c_str(), bench_out.c_str(), threads, &manifest.p));
      const json m = json::parse(manifest.str());
      std::cout << "wrote " << m.value("record_count", 0) << " score records to " << bench_out << "\n";
      const auto& failures = m.at("failures");
      for (const auto& f : failures)
        std::cerr << "failed: " << f.at("dataset").get<std::string>() << " / " << f.at("method").get<std::string>()
                  << " / " << f.at("scenario").get<std::string>() << ": " << f.at("error").get<std::string>() << "\n";
      return 0;
    }

    if (stats->parsed()) {
      Matrix in;
      check(kxk_matrix_load_csv(stats_in.c_str(), &in.p));
      CString js;
      check(kxk_stats_json(in.p, &js.p));
      if (stats_out.empty())
        std::cout << js.str() << "\n";
      else
        write_file(stats_out, js.str() + "\n");
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
