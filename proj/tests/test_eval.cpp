#include <cmath>
#include <numeric>

#include <doctest.h>

#include "fsn/eval.hpp"

using namespace fsn;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.grid = make_grid(-8.0, 8.0, 96);
  c.batch_size = 96;
  c.epochs = 60;
  c.learning_rate = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("adamw"), std::invalid_argument);
}

TEST_CASE("run_method delegates to training") {
  const TrainConfig c = small_config();
  const auto runs = run_method(Method::kRandom, 4, c, {3});
  REQUIRE(runs.size() == 1);
  TrainConfig seeded = c;
  seeded.seed = 3;
  const TrainResult direct = train_with_init(RandomInit{}, 4, seeded);
  CHECK(runs[0].mse == direct.history.final_mse);
  CHECK(*runs[0].params == direct.params);
  CHECK_THROWS_AS(run_method(Method::kRandom, 4, c, {}), std::invalid_argument);
}

TEST_CASE("shared pre-training matches per-method runs") {
  const TrainConfig c = small_config();
  const auto all = run_all_methods(5, c, 2);
  for (Method m : kAllMethods) {
    const auto single = run_method(m, 5, c, {2});
    CHECK(single[0].mse == all[static_cast<int>(m)].mse);
  }
  CHECK(all[2].curves.has_value());
}

TEST_CASE("aggregate statistics") {
  std::vector<SeedRun> runs(4);
  const std::vector<double> mses = {0.01, 0.02, 0.04, 0.03};
  for (std::size_t i = 0; i < 4; ++i) {
    runs[i].seed = i + 1;
    runs[i].mse = mses[i];
  }
  runs[3].diverged = true;
  const ReportRow row = aggregate(Method::kTbpi, 8, runs);
  CHECK(row.seed_count == 3);
  CHECK(row.excluded == 1);
  CHECK(std::isnan(row.per_seed_mse[3]));
  // Independent two-pass accumulation in long double.
  long double sum = 0, sq = 0;
  for (int i = 0; i < 3; ++i) sum += mses[i];
  const long double mean = sum / 3;
  for (int i = 0; i < 3; ++i) sq += (mses[i] - mean) * (mses[i] - mean);
  const double stderr_ = static_cast<double>(std::sqrt(sq / 2) / std::sqrt(3.0L));
  CHECK(std::abs(row.mse_mean - static_cast<double>(mean)) <= 1e-12);
  CHECK(std::abs(row.mse_stderr - stderr_) <= 1e-12);
  CHECK(row.mse_min == 0.01);
  CHECK_FALSE(row.stderr_degenerate);

  const ReportRow single = aggregate(Method::kRandom, 4, {runs[0]});
  CHECK(single.mse_stderr == 0.0);
  CHECK(single.stderr_degenerate);
}

TEST_CASE("rendering") {
  CHECK(format_scaled(0.006295, 1e-2) == "0.6295");

  EvalReport empty;
  const std::string table = render_table(empty);
  CHECK(table.find("method") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 1);
  CHECK(render_csv(empty) == std::string(kCsvHeader) + "\n");

  EvalReport report;
  std::vector<SeedRun> runs(2);
  runs[0] = {1, false, "", 0.0062951234567891, {}, {}};
  runs[1] = {2, false, "", 1.0 / 3.0 * 1e-2, {}, {}};
  report.rows.push_back(aggregate(Method::kTbpi, 8, runs));
  report.rows.push_back(aggregate(Method::kRandom, 4, {runs[1]}, 1e-3));
  const auto parsed = parse_csv(render_csv(report));
  REQUIRE(parsed.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(parsed[i].method == report.rows[i].method);
    CHECK(parsed[i].k == report.rows[i].k);
    CHECK(parsed[i].seed_count == report.rows[i].seed_count);
    CHECK(std::abs(parsed[i].mse_mean - report.rows[i].mse_mean) <= 1e-12);
    CHECK(std::abs(parsed[i].mse_stderr - report.rows[i].mse_stderr) <= 1e-12);
    CHECK(parsed[i].scale == report.rows[i].scale);
    CHECK(parsed[i].excluded == report.rows[i].excluded);
  }
  CHECK(render_table(report).find("single run") != std::string::npos);
}

TEST_CASE("scale does not change rankings") {
  std::vector<double> means = {0.0123, 0.0045, 0.0301, 0.0009};
  for (double scale : {1e-2, 1e-3, 1.0, 7.5}) {
    std::vector<std::size_t> order(means.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return std::stod(format_scaled(means[a], scale)) < std::stod(format_scaled(means[b], scale));
    });
    CHECK(order == std::vector<std::size_t>{3, 1, 0, 2});
  }
}

TEST_CASE("compare_methods table shape and determinism") {
  TrainConfig c = small_config();
  c.epochs = 20;
  const std::vector<std::size_t> ks = {4, 8, 12, 16};
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  const EvalReport a = compare_methods(ks, c, seeds, {}, 1);
  CHECK(a.rows.size() == 12);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].method == kAllMethods[i / 4]);
    CHECK(a.rows[i].k == ks[i % 4]);
    CHECK(a.rows[i].seed_count == 4);
    CHECK(a.rows[i].mse_mean >= 0.0);
    CHECK(a.rows[i].mse_stderr >= 0.0);
  }
  const EvalReport b = compare_methods(ks, c, seeds, {}, 3);
  CHECK(render_csv(a) == render_csv(b));
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());

  const EvalReport single = compare_methods({4}, c, {7}, {}, 1);
  CHECK(single.rows.size() == 3);
  for (const auto& row : single.rows) CHECK(row.stderr_degenerate);

  CHECK_THROWS_AS(compare_methods({}, c, seeds), std::invalid_argument);
  CHECK_THROWS_AS(compare_methods(ks, c, {}), std::invalid_argument);
}

TEST_CASE("divergent runs are excluded and counted") {
  TrainConfig c = small_config();
  c.grid = make_grid(-1e200, 1e200, 96);
  c.epochs = 5;
  const EvalReport r = compare_methods({4}, c, {1, 2});
  CHECK(r.warnings == 6);
  for (const auto& row : r.rows) {
    CHECK(row.excluded == 2);
    CHECK(row.seed_count == 0);
  }
  const json j = report_to_json(r);
  CHECK(j["rows"][0]["mse_mean"].is_null());
}
