#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "fsn/eval.hpp"
#include "fsn/io.hpp"

namespace fs = std::filesystem;
using namespace fsn;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fsn_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(FSN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const std::string kFast = " --epochs 40 --grid-n 128 --lr 0.01";

}  // namespace

TEST_CASE("pretrain writes params, history and metadata") {
  const fs::path dir = scratch_dir("pretrain");
  const std::string args = "pretrain --k 8 --target swish --seed 1 --out " + dir.string() + kFast;
  REQUIRE(run(args) == 0);
  const fs::path params = dir / "params_k8_seed1.json";
  REQUIRE(fs::exists(params));
  CHECK(params_from_json(read_json_file(params)).k() == 8);
  CHECK(fs::exists(dir / "history_k8_seed1.json"));
  const json meta = read_json_file(dir / "metadata_pretrain_k8_seed1.json");
  CHECK(meta["config"]["epochs"] == 40);
  CHECK(meta["seed"] == 1);
  CHECK(meta["config"]["target"] == "swish");

  const std::string first = read_file(params);
  REQUIRE(run(args) == 0);
  CHECK(read_file(params) == first);
}

TEST_CASE("usage errors exit with 2") {
  const fs::path dir = scratch_dir("usage");
  CHECK(run("pretrain --target swish --out " + dir.string()) == 2);
  CHECK(run("pretrain --k 4 --target tanh --out " + dir.string()) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("") == 2);
  CHECK(run("train --init gaussian --k 4 --out " + dir.string() + kFast) == 2);
}

TEST_CASE("config file merges under flags") {
  const fs::path dir = scratch_dir("config");
  write_json_atomic(dir / "cfg.json", {{"epochs", 3}, {"learning_rate", 0.02}, {"grid_n", 64}});
  REQUIRE(run("pretrain --k 4 --out " + dir.string() + " --config " + (dir / "cfg.json").string()) == 0);
  json meta = read_json_file(dir / "metadata_pretrain_k4_seed1.json");
  CHECK(meta["config"]["epochs"] == 3);
  CHECK(meta["config"]["learning_rate"] == 0.02);
  CHECK(meta["config"]["grid_n"] == 64);
  CHECK(meta["config"]["batch_size"] == 64);

  REQUIRE(run("pretrain --k 4 --epochs 5 --out " + dir.string() + " --config " +
              (dir / "cfg.json").string()) == 0);
  meta = read_json_file(dir / "metadata_pretrain_k4_seed1.json");
  CHECK(meta["config"]["epochs"] == 5);
  CHECK(meta["config"]["learning_rate"] == 0.02);
}

TEST_CASE("fit on a geometric parameter file") {
  const fs::path dir = scratch_dir("fit");
  write_json_atomic(dir / "geo.json", params_to_json(FsParams({8, 4, 2, 1, 0.5},
                                                              {4, 2, 1, 0.5, 0.25},
                                                              {6, 3, 1.5, 0.75, 0.375})));
  REQUIRE(run("fit --params " + (dir / "geo.json").string() + " --out " + dir.string()) == 0);
  for (const char* name : {"h", "d", "T"}) {
    const json c = read_json_file(dir / (std::string("geo_curve_") + name + ".json"));
    CHECK(c["family"] == "exponential");
    CHECK(c["k"] == 5);
  }
  const std::string csv = read_file(dir / "geo_fit.csv");
  CHECK(count_lines(csv) == 1 + 3 * 5);
  CHECK(csv.rfind("param,t,raw,fitted\n", 0) == 0);
}

TEST_CASE("corrupted input fails without partial outputs") {
  const fs::path dir = scratch_dir("corrupt");
  {
    std::ofstream(dir / "bad.json") << "{\"k\": 3, \"h\": [1, 2";
  }
  {
    std::ofstream(dir / "short.json") << R"({"k": 4, "h": [1], "d": [1], "T": [1]})";
  }
  const fs::path out = dir / "out";
  CHECK(run("fit --params " + (dir / "bad.json").string() + " --out " + out.string()) == 1);
  CHECK(run("fit --params " + (dir / "short.json").string() + " --out " + out.string()) == 1);
  CHECK(run("export --params " + (dir / "bad.json").string() + " --out " + out.string()) == 1);
  CHECK_FALSE(fs::exists(out));
  CHECK(run("fit --params " + (dir / "missing.json").string() + " --out " + out.string()) == 1);
}

TEST_CASE("init and train from a pre-trained file") {
  const fs::path dir = scratch_dir("train");
  REQUIRE(run("pretrain --k 6 --seed 2 --out " + dir.string() + kFast) == 0);
  const std::string src = (dir / "params_k6_seed2.json").string();
  const std::string before = read_file(src);

  REQUIRE(run("init --from " + src + " --method tbpi --seed 2 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "init_tbpi_k6_seed2.json"));
  CHECK(fs::exists(dir / "init_tbpi_k6_seed2_curve_h.json"));
  REQUIRE(run("init --from " + src + " --method gaussian --sigma 0.2 --seed 2 --out " +
              dir.string()) == 0);
  CHECK(fs::exists(dir / "init_gaussian_k6_seed2.json"));

  REQUIRE(run("train --init tbpi --from " + src + " --seed 2 --out " + dir.string() + kFast) == 0);
  CHECK(params_from_json(read_json_file(dir / "trained_tbpi_k6_seed2.json")).k() == 6);
  const json hist = read_json_file(dir / "history_tbpi_k6_seed2.json");
  CHECK(hist["loss"].size() == 40);
  REQUIRE(run("train --init random --k 5 --seed 3 --out " + dir.string() + kFast) == 0);
  CHECK(fs::exists(dir / "trained_random_k5_seed3.json"));

  CHECK(read_file(src) == before);
}

TEST_CASE("compare, network and export") {
  const fs::path dir = scratch_dir("compare");
  const std::string args = "compare --k 4,8,12,16 --seeds 1,2,3,4 --target swish --out " +
                           dir.string() + " --epochs 15 --grid-n 64";
  REQUIRE(run(args + " --threads 2") == 0);
  const std::string csv = read_file(dir / "report.csv");
  CHECK(count_lines(csv) == 13);
  CHECK(parse_csv(csv).size() == 12);
  const std::string table = read_file(dir / "report.txt");
  CHECK(table.find("x 0.01") != std::string::npos);
  const std::string json_text = read_file(dir / "report.json");

  REQUIRE(run(args + " --threads 1") == 0);
  CHECK(read_file(dir / "report.csv") == csv);
  CHECK(read_file(dir / "report.json") == json_text);
  CHECK(fs::exists(dir / "metadata_compare.json"));

  REQUIRE(run("network --k 4,6 --seeds 1,2 --method random --out " + dir.string() +
              " --epochs 15 --grid-n 64") == 0);
  const std::string net = read_file(dir / "network.csv");
  CHECK(count_lines(net) == 3);
  CHECK(net.find("network,random,4,") != std::string::npos);
  const json report = read_json_file(dir / "report.json");
  CHECK(report["network_rows"].size() == 2);
  CHECK(report["network_rows"][0]["level"] == "network");

  write_json_atomic(dir / "bin.json", params_to_json(FsParams::binary(4)));
  REQUIRE(run("export --params " + (dir / "bin.json").string() +
              " --target identity --domain-min 0 --domain-max 16 --points 33 --out " +
              dir.string()) == 0);
  CHECK(count_lines(read_file(dir / "bin_steps.csv")) == 17);
  CHECK(count_lines(read_file(dir / "bin_samples.csv")) == 34);
  const json summary = read_json_file(dir / "bin_export.json");
  CHECK(summary["exact_mse"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
}
