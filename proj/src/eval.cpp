#include "fsn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fsn {

namespace {

SeedRun run_strategy(const InitStrategy& init, std::size_t k,
                     const TrainConfig& config, std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  try {
    const TrainResult r = train_with_init(init, k, config);
    run.mse = r.history.final_mse;
    run.params = r.params;
  } catch (const TrainingError& e) {
    run.diverged = true;
    run.error = e.what();
  }
  return run;
}

SeedRun diverged_copy(const SeedRun& source) {
  SeedRun run;
  run.seed = source.seed;
  run.diverged = true;
  run.error = "pre-training failed: " + source.error;
  return run;
}

SeedRun run_tbpi(const FsParams& source, std::size_t k,
                 const TrainConfig& config, const MethodOptions& options) {
  const TbpiInit init{source, options.family, options.tbpi_noise_sigma};
  SeedRun run = run_strategy(init, k, config, config.seed);
  run.curves = tbpi_init(source, options.family, k, options.tbpi_noise_sigma,
                         derive_seed(config.seed, 2))
                   .curves;
  return run;
}

std::string family_summary(const std::optional<std::array<CurveModel, 3>>& curves) {
  if (!curves) return "none";
  return to_string((*curves)[0].family) + "/" + to_string((*curves)[1].family) +
         "/" + to_string((*curves)[2].family);
}

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct MeanStderr {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = 0.0;
  std::size_t n = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  std::vector<double> ok;
  for (double x : xs) {
    if (std::isfinite(x)) ok.push_back(x);
  }
  out.n = ok.size();
  if (ok.empty()) return out;
  double sum = 0.0;
  for (double x : ok) sum += x;
  out.mean = sum / static_cast<double>(ok.size());
  if (ok.size() > 1) {
    double ss = 0.0;
    for (double x : ok) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
    out.stderr_ = sd / std::sqrt(static_cast<double>(ok.size()));
  }
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kRandom: return "random";
    case Method::kGaussianNoise: return "gaussian";
    case Method::kTbpi: return "tbpi";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method: " + std::string(name));
}

std::array<SeedRun, 3> run_all_methods(std::size_t k, const TrainConfig& config,
                                       std::uint64_t seed,
                                       const MethodOptions& options) {
  TrainConfig c = config;
  c.seed = seed;
  std::array<SeedRun, 3> out;
  out[0] = run_strategy(RandomInit{}, k, c, seed);
  if (out[0].diverged) {
    out[1] = diverged_copy(out[0]);
    out[2] = diverged_copy(out[0]);
    return out;
  }
  const FsParams& source = *out[0].params;
  out[1] = run_strategy(GaussianInit{source, options.gaussian_sigma}, k, c, seed);
  out[2] = run_tbpi(source, k, c, options);
  return out;
}

std::vector<SeedRun> run_method(Method method, std::size_t k,
                                const TrainConfig& config,
                                const std::vector<std::uint64_t>& seeds,
                                const MethodOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("run_method: no seeds");
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : seeds) {
    TrainConfig c = config;
    c.seed = seed;
    if (method == Method::kRandom) {
      runs.push_back(run_strategy(RandomInit{}, k, c, seed));
      continue;
    }
    const SeedRun pre = run_strategy(RandomInit{}, k, c, seed);
    if (pre.diverged) {
      runs.push_back(diverged_copy(pre));
    } else if (method == Method::kGaussianNoise) {
      runs.push_back(run_strategy(GaussianInit{*pre.params, options.gaussian_sigma},
                                  k, c, seed));
    } else {
      runs.push_back(run_tbpi(*pre.params, k, c, options));
    }
  }
  return runs;
}

ReportRow aggregate(Method method, std::size_t k,
                    const std::vector<SeedRun>& runs, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("aggregate: scale must be > 0");
  ReportRow row;
  row.method = method;
  row.k = k;
  row.scale = scale;
  row.mse_min = std::numeric_limits<double>::quiet_NaN();
  for (const SeedRun& r : runs) {
    row.seeds.push_back(r.seed);
    row.per_seed_mse.push_back(r.diverged ? std::numeric_limits<double>::quiet_NaN()
                                          : r.mse);
    if (method == Method::kTbpi) row.families.push_back(family_summary(r.curves));
    if (r.diverged) {
      ++row.excluded;
    } else if (!(row.mse_min <= r.mse)) {
      row.mse_min = r.mse;
    }
  }
  const MeanStderr ms = mean_stderr(row.per_seed_mse);
  row.seed_count = ms.n;
  row.mse_mean = ms.mean;
  row.mse_stderr = ms.stderr_;
  row.stderr_degenerate = ms.n < 2;
  return row;
}

EvalReport compare_methods(const std::vector<std::size_t>& k_list,
                           const TrainConfig& config,
                           const std::vector<std::uint64_t>& seeds,
                           const MethodOptions& options, std::size_t threads,
                           double scale) {
  if (k_list.empty()) throw std::invalid_argument("compare_methods: empty k list");
  if (seeds.empty()) throw std::invalid_argument("compare_methods: no seeds");
  config.validate();
  std::vector<std::size_t> ks = k_list;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const std::size_t units = ks.size() * seeds.size();
  std::vector<std::array<SeedRun, 3>> results(units);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < units; i = next++) {
      results[i] = run_all_methods(ks[i / seeds.size()], config,
                                   seeds[i % seeds.size()], options);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, units);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EvalReport report;
  report.target = config.target;
  report.grid_min = config.grid.x_min;
  report.grid_max = config.grid.x_max;
  report.grid_n = config.grid.size();
  report.default_grid = config.grid.x_min == kDefaultGridMin &&
                        config.grid.x_max == kDefaultGridMax &&
                        config.grid.size() == kDefaultGridPoints;
  report.config = config;
  report.options = options;
  for (Method m : kAllMethods) {
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      std::vector<SeedRun> runs;
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        runs.push_back(results[ki * seeds.size() + si][static_cast<int>(m)]);
      }
      report.rows.push_back(aggregate(m, ks[ki], runs, scale));
      report.warnings += report.rows.back().excluded;
    }
  }
  return report;
}

std::string format_scaled(double value, double scale) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value / scale);
  return buf;
}

std::string render_table(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %4s %6s %12s %12s %12s %8s\n", "method",
                "k", "seeds", "mse_mean", "mse_stderr", "mse_min", "excluded");
  out << line;
  for (const ReportRow& r : report.rows) {
    std::snprintf(line, sizeof line, "%-10s %4zu %6zu %12s %12s %12s %8zu%s\n",
                  std::string(to_string(r.method)).c_str(), r.k, r.seed_count,
                  format_scaled(r.mse_mean, r.scale).c_str(),
                  format_scaled(r.mse_stderr, r.scale).c_str(),
                  format_scaled(r.mse_min, r.scale).c_str(), r.excluded,
                  r.stderr_degenerate ? "  (single run: stderr 0)" : "");
    out << line;
  }
  if (!report.rows.empty()) {
    std::snprintf(line, sizeof line, "(values x %g, target %s, grid [%g, %g] n=%zu)\n",
                  report.rows.front().scale,
                  std::string(to_string(report.target)).c_str(), report.grid_min,
                  report.grid_max, report.grid_n);
    out << line;
  }
  return out.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const ReportRow& r : report.rows) {
    out << to_string(r.method) << ',' << r.k << ',' << r.seed_count << ','
        << g17(r.mse_mean) << ',' << g17(r.mse_stderr) << ',' << g17(r.scale)
        << ',' << r.excluded << "\n";
  }
  return out.str();
}

std::vector<CsvRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("parse_csv: unexpected header");
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw std::invalid_argument("parse_csv: bad row: " + line);
    CsvRow r;
    r.method = parse_method(f[0]);
    r.k = std::stoul(f[1]);
    r.seed_count = std::stoul(f[2]);
    r.mse_mean = std::strtod(f[3].c_str(), nullptr);
    r.mse_stderr = std::strtod(f[4].c_str(), nullptr);
    r.scale = std::strtod(f[5].c_str(), nullptr);
    r.excluded = std::stoul(f[6]);
    rows.push_back(r);
  }
  return rows;
}

std::string render_network_csv(const std::vector<NetworkRow>& rows) {
  std::ostringstream out;
  out << kNetworkCsvHeader << "\n";
  for (const NetworkRow& r : rows) {
    out << "network," << to_string(r.method) << ',' << r.k << ','
        << r.per_seed_mae.size() - r.excluded << ',' << g17(r.mae_mean) << ','
        << g17(r.mae_stderr) << ',' << g17(r.rmse_mean) << ','
        << g17(r.rmse_stderr) << ',' << r.excluded << "\n";
  }
  return out.str();
}

json network_row_to_json(const NetworkRow& r) {
  return json{{"level", "network"},
              {"method", std::string(to_string(r.method))},
              {"k", r.k},
              {"seeds", r.seeds},
              {"per_seed_mae", r.per_seed_mae},
              {"per_seed_rmse", r.per_seed_rmse},
              {"mae_mean", r.mae_mean},
              {"mae_stderr", r.mae_stderr},
              {"rmse_mean", r.rmse_mean},
              {"rmse_stderr", r.rmse_stderr},
              {"excluded", r.excluded}};
}

json report_to_json(const EvalReport& report) {
  json rows = json::array();
  for (const ReportRow& r : report.rows) {
    json per_seed = json::array();
    for (double x : r.per_seed_mse) {
      per_seed.push_back(std::isfinite(x) ? json(x) : json(nullptr));
    }
    json row{{"level", "neuron"},
             {"method", std::string(to_string(r.method))},
             {"k", r.k},
             {"seeds", r.seeds},
             {"per_seed_mse", per_seed},
             {"seed_count", r.seed_count},
             {"excluded", r.excluded},
             {"mse_mean", std::isfinite(r.mse_mean) ? json(r.mse_mean) : json(nullptr)},
             {"mse_stderr", r.mse_stderr},
             {"mse_min", std::isfinite(r.mse_min) ? json(r.mse_min) : json(nullptr)},
             {"stderr_degenerate", r.stderr_degenerate},
             {"scale", r.scale}};
    if (!r.families.empty()) row["fit_families"] = r.families;
    rows.push_back(row);
  }
  json network = json::array();
  for (const NetworkRow& r : report.network_rows) network.push_back(network_row_to_json(r));
  return json{{"target", std::string(to_string(report.target))},
              {"grid", {{"x_min", report.grid_min},
                        {"x_max", report.grid_max},
                        {"n", report.grid_n},
                        {"default_grid", report.default_grid}}},
              {"config", config_to_json(report.config)},
              {"options", {{"gaussian_sigma", report.options.gaussian_sigma},
                           {"fit_family", to_string(report.options.family)},
                           {"tbpi_noise_sigma", report.options.tbpi_noise_sigma}}},
              {"warnings", report.warnings},
              {"rows", rows},
              {"network_rows", network}};
}

}  // namespace fsn
