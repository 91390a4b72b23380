#ifndef FSN_EVAL_HPP
#define FSN_EVAL_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsn/io.hpp"
#include "fsn/train.hpp"

namespace fsn {

// Initialization strategies compared by the evaluation protocol.
enum class Method { kRandom, kGaussianNoise, kTbpi };

inline constexpr std::array<Method, 3> kAllMethods = {
    Method::kRandom, Method::kGaussianNoise, Method::kTbpi};

std::string_view to_string(Method method);  // "random", "gaussian", "tbpi"
Method parse_method(std::string_view name);

struct MethodOptions {
  double gaussian_sigma = 0.1;
  FitFamily family = FitFamily::exponential();
  double tbpi_noise_sigma = 0.0;
};

// Outcome of one method for one seed.
struct SeedRun {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string error;
  double mse = 0.0;  // best-seen grid MSE; meaningless when diverged
  std::optional<FsParams> params;
  std::optional<std::array<CurveModel, 3>> curves;  // Tbpi only
};

// Random: train from random values. GaussianNoise / Tbpi: pretrain, derive
// the new starting point, retrain. Each seed is pre-trained independently.
std::vector<SeedRun> run_method(Method method, std::size_t k,
                                const TrainConfig& config,
                                const std::vector<std::uint64_t>& seeds,
                                const MethodOptions& options = {});

// All three methods for one (k, seed), sharing a single pre-training run
// (the Random result is that run). Index by static_cast<int>(Method).
std::array<SeedRun, 3> run_all_methods(std::size_t k, const TrainConfig& config,
                                       std::uint64_t seed,
                                       const MethodOptions& options = {});

struct ReportRow {
  Method method = Method::kRandom;
  std::size_t k = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_mse;  // aligned with seeds; NaN if diverged
  std::vector<std::string> families;  // Tbpi: "h/d/T" fit families per seed
  std::size_t seed_count = 0;         // successful runs
  std::size_t excluded = 0;           // diverged runs
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  double mse_min = 0.0;
  bool stderr_degenerate = false;  // fewer than two successful runs
  double scale = 1e-2;
};

// Mean, standard error (sample sd / sqrt n) and min over non-diverged runs.
ReportRow aggregate(Method method, std::size_t k,
                    const std::vector<SeedRun>& runs, double scale = 1e-2);

struct NetworkRow {
  Method method = Method::kRandom;
  std::size_t k = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_mae;
  std::vector<double> per_seed_rmse;
  double mae_mean = 0.0;
  double mae_stderr = 0.0;
  double rmse_mean = 0.0;
  double rmse_stderr = 0.0;
  std::size_t excluded = 0;
};

struct EvalReport {
  ActivationKind target = ActivationKind::kSwish;
  double grid_min = kDefaultGridMin;
  double grid_max = kDefaultGridMax;
  std::size_t grid_n = kDefaultGridPoints;
  bool default_grid = true;
  TrainConfig config;
  MethodOptions options;
  std::vector<ReportRow> rows;  // sorted by method, then k
  std::vector<NetworkRow> network_rows;
  std::size_t warnings = 0;     // diverged runs across all cells
};

// Full (method x k) table. Work is split into (k, seed) units run on up to
// `threads` workers; results are placed by index, so output does not depend
// on scheduling.
EvalReport compare_methods(const std::vector<std::size_t>& k_list,
                           const TrainConfig& config,
                           const std::vector<std::uint64_t>& seeds,
                           const MethodOptions& options = {},
                           std::size_t threads = 1, double scale = 1e-2);

// value / scale with four decimals, e.g. 0.006295 at 1e-2 -> "0.6295".
std::string format_scaled(double value, double scale);

// Fixed-width text table in scaled units; header only when there are no rows.
std::string render_table(const EvalReport& report);

// Header: method,k,seed_count,mse_mean,mse_stderr,scale,excluded
inline constexpr std::string_view kCsvHeader =
    "method,k,seed_count,mse_mean,mse_stderr,scale,excluded";
std::string render_csv(const EvalReport& report);

struct CsvRow {
  Method method = Method::kRandom;
  std::size_t k = 0;
  std::size_t seed_count = 0;
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  double scale = 0.0;
  std::size_t excluded = 0;
};
std::vector<CsvRow> parse_csv(const std::string& text);

// Header: level,method,k,seed_count,mae_mean,mae_stderr,rmse_mean,rmse_stderr,excluded
inline constexpr std::string_view kNetworkCsvHeader =
    "level,method,k,seed_count,mae_mean,mae_stderr,rmse_mean,rmse_stderr,excluded";
std::string render_network_csv(const std::vector<NetworkRow>& rows);

json report_to_json(const EvalReport& report);
json network_row_to_json(const NetworkRow& row);

}  // namespace fsn

#endif  // FSN_EVAL_HPP
