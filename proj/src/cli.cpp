#include "fsn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fsn/eval.hpp"
#include "fsn/io.hpp"
#include "fsn/network.hpp"
#include "fsn/train.hpp"

namespace fs = std::filesystem;

namespace fsn {

namespace {

// Training flags shared by every command that trains. Each flag only
// overrides the config file (and the built-in defaults) when given.
struct TrainFlags {
  std::string config_file;
  std::string target = "swish";
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double lr = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double eps = 0.0;
  double width = 0.0;
  double grid_min = 0.0;
  double grid_max = 0.0;
  std::size_t grid_n = 0;
  std::vector<CLI::Option*> opts;
  CLI::Option* target_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--config", config_file,
                    "JSON file with training settings (flags take precedence)")
        ->check(CLI::ExistingFile);
    target_opt = app->add_option("--target", target, "swish|gelu|sigmoid|relu|identity");
    opts = {app->add_option("--epochs", epochs, "training epochs"),
            app->add_option("--batch-size", batch_size, "mini-batch size (default: full grid)"),
            app->add_option("--lr", lr, "Adam learning rate"),
            app->add_option("--beta1", beta1, "Adam beta1"),
            app->add_option("--beta2", beta2, "Adam beta2"),
            app->add_option("--eps", eps, "Adam epsilon"),
            app->add_option("--surrogate-width", width, "triangular surrogate half-width"),
            app->add_option("--grid-min", grid_min, "lower end of the sample grid"),
            app->add_option("--grid-max", grid_max, "upper end of the sample grid"),
            app->add_option("--grid-n", grid_n, "number of grid points")};
  }

  TrainConfig resolve(std::uint64_t seed) const {
    TrainConfig c;
    if (!config_file.empty()) c = config_from_json(read_json_file(config_file), c);
    auto given = [&](std::size_t i) { return opts[i]->count() > 0; };
    if (target_opt->count() > 0 || config_file.empty()) c.target = parse_activation(target);
    if (given(0)) c.epochs = epochs;
    if (given(2)) c.learning_rate = lr;
    if (given(3)) c.adam_beta1 = beta1;
    if (given(4)) c.adam_beta2 = beta2;
    if (given(5)) c.adam_eps = eps;
    if (given(6)) c.surrogate_width = width;
    if (given(7) || given(8) || given(9)) {
      const bool was_full = c.batch_size == c.grid.size();
      c.grid = make_grid(given(7) ? grid_min : c.grid.x_min,
                         given(8) ? grid_max : c.grid.x_max,
                         given(9) ? grid_n : c.grid.size());
      if (was_full) c.batch_size = c.grid.size();
    }
    if (given(1)) c.batch_size = batch_size;
    c.seed = seed;
    c.validate();
    return c;
  }
};

std::vector<std::size_t> parse_count_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw CLI::ValidationError("list", "expected comma-separated integers: " + text);
    }
    out.push_back(std::stoull(item));
  }
  if (out.empty()) throw CLI::ValidationError("list", "empty list");
  return out;
}

std::vector<std::uint64_t> as_seeds(const std::vector<std::size_t>& xs) {
  return {xs.begin(), xs.end()};
}

std::string tag(std::size_t k, std::uint64_t seed) {
  return "k" + std::to_string(k) + "_seed" + std::to_string(seed);
}

json metadata(const std::string& command, const TrainConfig* config, json options,
              json inputs, json outputs) {
  json m{{"command", command},
         {"version", std::string(kVersion)},
         {"options", std::move(options)},
         {"inputs", std::move(inputs)},
         {"outputs", std::move(outputs)}};
  if (config != nullptr) {
    m["config"] = config_to_json(*config);
    m["seed"] = config->seed;
  }
  return m;
}

std::string path_str(const fs::path& p) { return p.generic_string(); }

FsParams load_params(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return params_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error("invalid params file " + path + ": " + e.what());
  }
}

void print_history_summary(const std::string& label, const TrainResult& r) {
  std::fprintf(stderr, "%s: best mse %.6g at epoch %zu of %zu (%.2fs)\n",
               label.c_str(), r.history.final_mse, r.history.best_epoch,
               r.history.loss.size(), r.history.wall_time.count());
}

int cmd_pretrain(std::size_t k, std::uint64_t seed, const TrainFlags& flags,
                 const fs::path& out) {
  const TrainConfig config = flags.resolve(seed);
  const TrainResult r = pretrain(k, config);
  print_history_summary("pretrain " + tag(k, seed), r);
  const fs::path params = out / ("params_" + tag(k, seed) + ".json");
  const fs::path history = out / ("history_" + tag(k, seed) + ".json");
  write_json_atomic(params, params_to_json(r.params));
  write_json_atomic(history, history_to_json(r.history));
  write_json_atomic(out / ("metadata_pretrain_" + tag(k, seed) + ".json"),
                    metadata("pretrain", &config, {{"k", k}}, json::array(),
                             {path_str(params), path_str(history)}));
  return 0;
}

int cmd_fit(const std::string& input, const std::string& family_name,
            const fs::path& out) {
  const FsParams params = load_params(input);
  const FitFamily family = parse_fit_family(family_name);
  if (params.k() < 3) throw std::runtime_error("fit: need k >= 3 to fit curves");
  const TbpiResult fitted = tbpi_init(params, family);
  const auto& curves = *fitted.curves;
  const std::array<const std::vector<double>*, 3> raw = {&params.h(), &params.d(),
                                                         &params.thr()};
  const std::array<const char*, 3> names = {"h", "d", "T"};

  std::ostringstream csv;
  csv.precision(17);
  csv << "param,t,raw,fitted\n";
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t t = 0; t < params.k(); ++t) {
      csv << names[j] << ',' << t + 1 << ',' << (*raw[j])[t] << ','
          << eval_curve(curves[j], static_cast<double>(t + 1)) << "\n";
    }
  }
  const std::string stem = fs::path(input).stem().string();
  json outputs = json::array();
  for (std::size_t j = 0; j < 3; ++j) {
    const fs::path p = out / (stem + "_curve_" + names[j] + ".json");
    write_json_atomic(p, curve_to_json(curves[j]));
    outputs.push_back(path_str(p));
    std::fprintf(stderr, "%s: %s (residual rms %.3g)\n", names[j],
                 to_string(curves[j].family).c_str(), curves[j].residual_rms);
  }
  const fs::path csv_path = out / (stem + "_fit.csv");
  write_file_atomic(csv_path, csv.str());
  outputs.push_back(path_str(csv_path));
  write_json_atomic(out / ("metadata_fit_" + stem + ".json"),
                    metadata("fit", nullptr, {{"family", family_name}}, {input}, outputs));
  return 0;
}

struct InitFlags {
  std::string method = "tbpi";
  std::string from;
  double sigma = 0.1;
  std::string family = "exponential";
  double tbpi_noise = 0.0;
};

InitStrategy make_strategy(const InitFlags& f, std::optional<FsParams> source) {
  const Method m = parse_method(f.method);
  if (m == Method::kRandom) return RandomInit{};
  if (!source) throw CLI::ValidationError("--from", "required for --init " + f.method);
  if (m == Method::kGaussianNoise) return GaussianInit{*source, f.sigma};
  return TbpiInit{*source, parse_fit_family(f.family), f.tbpi_noise};
}

json init_options(const InitFlags& f, std::size_t k) {
  return {{"init", f.method}, {"from", f.from},   {"sigma", f.sigma},
          {"family", f.family}, {"tbpi_noise_sigma", f.tbpi_noise}, {"k", k}};
}

int cmd_init(const InitFlags& f, std::size_t k_flag, std::uint64_t seed,
             const fs::path& out) {
  const FsParams source = load_params(f.from);
  const std::size_t k = k_flag == 0 ? source.k() : k_flag;
  TrainConfig config;
  config.seed = seed;
  const InitStrategy init = make_strategy(f, source);
  const FsParams params = initial_params(init, k, config);
  const std::string name = "init_" + f.method + "_" + tag(k, seed);
  const fs::path p = out / (name + ".json");
  json outputs = {path_str(p)};
  if (const auto* t = std::get_if<TbpiInit>(&init)) {
    const TbpiResult fitted = tbpi_init(t->source, t->family, k, t->noise_sigma,
                                        derive_seed(seed, 2));
    if (fitted.curves) {
      const std::array<const char*, 3> names = {"h", "d", "T"};
      for (std::size_t j = 0; j < 3; ++j) {
        const fs::path cp = out / (name + "_curve_" + names[j] + ".json");
        write_json_atomic(cp, curve_to_json((*fitted.curves)[j]));
        outputs.push_back(path_str(cp));
      }
    }
  }
  write_json_atomic(p, params_to_json(params));
  write_json_atomic(out / ("metadata_" + name + ".json"),
                    metadata("init", &config, init_options(f, k), {f.from}, outputs));
  return 0;
}

int cmd_train(const InitFlags& f, std::size_t k_flag, std::uint64_t seed,
              const TrainFlags& flags, const fs::path& out) {
  std::optional<FsParams> source;
  if (!f.from.empty()) source = load_params(f.from);
  std::size_t k = k_flag;
  if (k == 0) {
    if (!source) throw CLI::ValidationError("--k", "required with --init random");
    k = source->k();
  }
  const TrainConfig config = flags.resolve(seed);
  const TrainResult r = train_with_init(make_strategy(f, source), k, config);
  const std::string name = f.method + "_" + tag(k, seed);
  print_history_summary("train " + name, r);
  const fs::path params = out / ("trained_" + name + ".json");
  const fs::path history = out / ("history_" + name + ".json");
  write_json_atomic(params, params_to_json(r.params));
  write_json_atomic(history, history_to_json(r.history));
  json inputs = json::array();
  if (!f.from.empty()) inputs.push_back(f.from);
  write_json_atomic(out / ("metadata_train_" + name + ".json"),
                    metadata("train", &config, init_options(f, k), inputs,
                             {path_str(params), path_str(history)}));
  return 0;
}

struct CompareFlags {
  std::string ks = "4,8,12,16";
  std::string seeds = "1,2,3,4";
  std::size_t threads = 0;
  double scale = 1e-2;
  double sigma = 0.1;
  std::string family = "exponential";
  double tbpi_noise = 0.0;
};

MethodOptions method_options(const CompareFlags& c) {
  return {c.sigma, parse_fit_family(c.family), c.tbpi_noise};
}

std::size_t thread_count(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_compare(const CompareFlags& c, const TrainFlags& flags, const fs::path& out) {
  const auto ks = parse_count_list(c.ks);
  const auto seeds = as_seeds(parse_count_list(c.seeds));
  if (!(c.scale > 0.0)) throw CLI::ValidationError("--scale", "must be > 0");
  const TrainConfig config = flags.resolve(seeds.front());
  const EvalReport report =
      compare_methods(ks, config, seeds, method_options(c), thread_count(c.threads), c.scale);
  const std::string table = render_table(report);
  std::cout << table;
  if (report.warnings > 0) {
    std::fprintf(stderr, "warning: %zu diverged run(s) excluded\n", report.warnings);
  }
  write_file_atomic(out / "report.txt", table);
  write_file_atomic(out / "report.csv", render_csv(report));
  write_json_atomic(out / "report.json", report_to_json(report));
  const json options = {{"k", c.ks},         {"seeds", c.seeds},
                        {"scale", c.scale},  {"sigma", c.sigma},
                        {"family", c.family}, {"tbpi_noise_sigma", c.tbpi_noise}};
  write_json_atomic(out / "metadata_compare.json",
                    metadata("compare", &config, options, json::array(),
                             {path_str(out / "report.txt"), path_str(out / "report.csv"),
                              path_str(out / "report.json")}));
  return 0;
}

struct NetworkFlags {
  std::string layers = "1,16,16,1";
  std::uint64_t mlp_seed = 1;
  std::size_t inputs = 256;
  double x_min = -4.0;
  double x_max = 4.0;
  std::string method = "tbpi";
};

int cmd_network(const CompareFlags& c, const NetworkFlags& n, const TrainFlags& flags,
                const fs::path& out) {
  const auto ks = parse_count_list(c.ks);
  const auto seeds = as_seeds(parse_count_list(c.seeds));
  NetworkProbe probe;
  probe.layer_sizes = parse_count_list(n.layers);
  probe.mlp_seed = n.mlp_seed;
  probe.n_inputs = n.inputs;
  probe.x_min = n.x_min;
  probe.x_max = n.x_max;
  const TrainConfig config = flags.resolve(seeds.front());
  const Method method = parse_method(n.method);
  const auto rows = network_eval(ks, config, seeds, method, method_options(c), probe);

  for (const NetworkRow& r : rows) {
    std::printf("network %-9s k=%-3zu mae %.6g +- %.3g  rmse %.6g +- %.3g\n",
                std::string(to_string(r.method)).c_str(), r.k, r.mae_mean,
                r.mae_stderr, r.rmse_mean, r.rmse_stderr);
  }
  json rows_json = json::array();
  for (const NetworkRow& r : rows) rows_json.push_back(network_row_to_json(r));
  write_file_atomic(out / "network.csv", render_network_csv(rows));
  write_json_atomic(out / "network.json", rows_json);
  json outputs = {path_str(out / "network.csv"), path_str(out / "network.json")};

  // Attach to an existing neuron-level report in the same directory.
  const fs::path report = out / "report.json";
  if (fs::exists(report)) {
    json j = read_json_file(report);
    for (const auto& row : rows_json) j["network_rows"].push_back(row);
    write_json_atomic(report, j);
    outputs.push_back(path_str(report));
  }
  const json options = {{"k", c.ks},          {"seeds", c.seeds},
                        {"method", n.method},  {"layers", n.layers},
                        {"mlp_seed", n.mlp_seed}, {"inputs", n.inputs},
                        {"x_min", n.x_min},    {"x_max", n.x_max},
                        {"sigma", c.sigma},    {"family", c.family},
                        {"tbpi_noise_sigma", c.tbpi_noise}};
  write_json_atomic(out / "metadata_network.json",
                    metadata("network", &config, options, json::array(), outputs));
  return 0;
}

int cmd_export(const std::string& input, const std::string& target_name, double lo,
               double hi, std::size_t points, const fs::path& out) {
  const FsParams params = load_params(input);
  const ActivationKind target = parse_activation(target_name);
  const StepFunction sf = to_step_function(params, lo, hi);
  const double mse = exact_mse(params, target, lo, hi);

  std::ostringstream step;
  step.precision(17);
  step << "lo,hi,value\n";
  for (std::size_t i = 0; i < sf.piece_count(); ++i) {
    step << sf.piece_lo(i) << ',' << sf.piece_hi(i) << ',' << sf.values[i] << "\n";
  }
  std::ostringstream samples;
  samples.precision(17);
  samples << "x,target,approx\n";
  for (double x : make_grid(lo, hi, points).points) {
    samples << x << ',' << eval_activation(target, x) << ',' << forward_value(params, x)
            << "\n";
  }
  const std::string stem = fs::path(input).stem().string();
  const fs::path step_path = out / (stem + "_steps.csv");
  const fs::path sample_path = out / (stem + "_samples.csv");
  const fs::path summary_path = out / (stem + "_export.json");
  write_file_atomic(step_path, step.str());
  write_file_atomic(sample_path, samples.str());
  write_json_atomic(summary_path, {{"exact_mse", mse},
                                   {"pieces", sf.piece_count()},
                                   {"domain", {lo, hi}},
                                   {"target", target_name}});
  std::printf("exact mse on [%g, %g]: %.10g (%zu pieces)\n", lo, hi, mse, sf.piece_count());
  write_json_atomic(out / ("metadata_export_" + stem + ".json"),
                    metadata("export", nullptr,
                             {{"target", target_name}, {"lo", lo}, {"hi", hi},
                              {"points", points}},
                             {input},
                             {path_str(step_path), path_str(sample_path),
                              path_str(summary_path)}));
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Few-spikes neuron training with tendency-based initialization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string out = "runs";
  std::size_t k = 0;
  std::uint64_t seed = 1;
  InitFlags init_flags;
  CompareFlags compare_flags;
  NetworkFlags network_flags;

  auto* pre = app.add_subcommand("pretrain", "train from random initial values");
  TrainFlags pre_flags;
  pre->add_option("--k", k, "time steps")->required()->check(CLI::PositiveNumber);
  pre->add_option("--seed", seed, "random seed");
  pre->add_option("--out", out, "output directory");
  pre_flags.add(pre);

  auto* fit_cmd = app.add_subcommand("fit", "fit curves to a parameter file");
  std::string params_path;
  std::string family = "auto";
  fit_cmd->add_option("--params", params_path, "params JSON")->required();
  fit_cmd->add_option("--family", family, "auto|exponential|poly<N>");
  fit_cmd->add_option("--out", out, "output directory");

  auto* init_cmd = app.add_subcommand("init", "derive initial parameters from a source");
  init_cmd->add_option("--from", init_flags.from, "source params JSON")->required();
  init_cmd->add_option("--method", init_flags.method, "gaussian|tbpi");
  init_cmd->add_option("--sigma", init_flags.sigma, "Gaussian noise std dev");
  init_cmd->add_option("--family", init_flags.family, "fit family for tbpi (exponential|poly<N>|auto)");
  init_cmd->add_option("--tbpi-noise", init_flags.tbpi_noise, "noise added along fitted curves");
  init_cmd->add_option("--k", k, "target time steps (default: source k)");
  init_cmd->add_option("--seed", seed, "random seed");
  init_cmd->add_option("--out", out, "output directory");

  auto* train_cmd = app.add_subcommand("train", "train with a chosen initialization");
  TrainFlags train_flags;
  train_cmd->add_option("--init", init_flags.method, "random|gaussian|tbpi");
  train_cmd->add_option("--from", init_flags.from, "source params JSON");
  train_cmd->add_option("--sigma", init_flags.sigma, "Gaussian noise std dev");
  train_cmd->add_option("--family", init_flags.family, "fit family for tbpi (exponential|poly<N>|auto)");
  train_cmd->add_option("--tbpi-noise", init_flags.tbpi_noise, "noise added along fitted curves");
  train_cmd->add_option("--k", k, "time steps (default: source k)");
  train_cmd->add_option("--seed", seed, "random seed");
  train_cmd->add_option("--out", out, "output directory");
  train_flags.add(train_cmd);

  auto add_compare_flags = [&](CLI::App* cmd) {
    cmd->add_option("--k", compare_flags.ks, "comma-separated time-step counts");
    cmd->add_option("--seeds", compare_flags.seeds, "comma-separated seeds");
    cmd->add_option("--threads", compare_flags.threads, "worker threads (0: all cores)");
    cmd->add_option("--sigma", compare_flags.sigma, "Gaussian baseline noise std dev");
    cmd->add_option("--family", compare_flags.family, "fit family for tbpi (exponential|poly<N>|auto)");
    cmd->add_option("--tbpi-noise", compare_flags.tbpi_noise, "noise added along fitted curves");
    cmd->add_option("--out", out, "output directory");
  };
  auto* cmp = app.add_subcommand("compare", "compare initialization methods across K");
  TrainFlags cmp_flags;
  add_compare_flags(cmp);
  cmp->add_option("--scale", compare_flags.scale, "reporting scale");
  cmp_flags.add(cmp);

  auto* net = app.add_subcommand("network", "network-level substitution error");
  TrainFlags net_flags;
  add_compare_flags(net);
  net->add_option("--method", network_flags.method, "random|gaussian|tbpi");
  net->add_option("--layers", network_flags.layers, "comma-separated layer sizes");
  net->add_option("--mlp-seed", network_flags.mlp_seed, "MLP weight seed");
  net->add_option("--inputs", network_flags.inputs, "number of probe inputs");
  net->add_option("--x-min", network_flags.x_min, "probe input lower end");
  net->add_option("--x-max", network_flags.x_max, "probe input upper end");
  net_flags.add(net);

  auto* exp = app.add_subcommand("export", "step function and samples for plotting");
  std::string target = "swish";
  double lo = kDefaultGridMin;
  double hi = kDefaultGridMax;
  std::size_t points = 2048;
  exp->add_option("--params", params_path, "params JSON")->required();
  exp->add_option("--target", target, "target activation");
  exp->add_option("--domain-min", lo, "domain lower end");
  exp->add_option("--domain-max", hi, "domain upper end");
  exp->add_option("--points", points, "sample count");
  exp->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const fs::path out_dir(out);
  try {
    if (pre->parsed()) return cmd_pretrain(k, seed, pre_flags, out_dir);
    if (fit_cmd->parsed()) return cmd_fit(params_path, family, out_dir);
    if (init_cmd->parsed()) return cmd_init(init_flags, k, seed, out_dir);
    if (train_cmd->parsed()) return cmd_train(init_flags, k, seed, train_flags, out_dir);
    if (cmp->parsed()) return cmd_compare(compare_flags, cmp_flags, out_dir);
    if (net->parsed()) return cmd_network(compare_flags, network_flags, net_flags, out_dir);
    if (exp->parsed()) return cmd_export(params_path, target, lo, hi, points, out_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << " (epoch " << e.epoch() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace fsn
