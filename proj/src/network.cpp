#include "fsn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fsn {

namespace {

Eigen::VectorXd activate(const HiddenActivation& act, Eigen::VectorXd z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = apply_activation(act, z(i));
  return z;
}

}  // namespace

MlpSpec build_mlp(const std::vector<std::size_t>& layer_sizes,
                  std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("build_mlp: need at least 2 layers");
  }
  for (std::size_t n : layer_sizes) {
    if (n == 0) throw std::invalid_argument("build_mlp: zero-width layer");
  }
  MlpSpec spec;
  spec.layer_sizes = layer_sizes;
  spec.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(layer_sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> w(-bound, bound);
    std::uniform_real_distribution<double> b(-0.5, 0.5);
    Eigen::MatrixXd weights(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) weights(r, c) = w(rng);
    }
    Eigen::VectorXd bias(fan_out);
    for (Eigen::Index r = 0; r < fan_out; ++r) bias(r) = b(rng);
    spec.weights.push_back(std::move(weights));
    spec.biases.push_back(std::move(bias));
  }
  return spec;
}

double apply_activation(const HiddenActivation& act, double z) {
  if (const auto* kind = std::get_if<ActivationKind>(&act)) {
    return eval_activation(*kind, z);
  }
  return forward_value(std::get<FsParams>(act), z);
}

Eigen::VectorXd forward_mlp(const MlpSpec& spec, const HiddenActivation& act,
                            const Eigen::VectorXd& input) {
  if (static_cast<std::size_t>(input.size()) != spec.layer_sizes.front()) {
    throw std::invalid_argument("forward_mlp: input dimension mismatch");
  }
  Eigen::VectorXd a = input;
  const std::size_t layers = spec.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::VectorXd z = spec.weights[l] * a + spec.biases[l];
    a = l + 1 < layers ? activate(act, std::move(z)) : std::move(z);
  }
  return a;
}

std::vector<double> forward_mlp(const MlpSpec& spec, const HiddenActivation& act,
                                std::span<const double> xs) {
  if (spec.layer_sizes.front() != 1 || spec.layer_sizes.back() != 1) {
    throw std::invalid_argument("forward_mlp: scalar form needs 1-dim input and output");
  }
  std::vector<double> out;
  out.reserve(xs.size());
  Eigen::VectorXd in(1);
  for (double x : xs) {
    in(0) = x;
    out.push_back(forward_mlp(spec, act, in)(0));
  }
  return out;
}

std::vector<Eigen::VectorXd> hidden_preactivations(const MlpSpec& spec,
                                                   const HiddenActivation& act,
                                                   const Eigen::VectorXd& input) {
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd a = input;
  for (std::size_t l = 0; l + 1 < spec.weights.size(); ++l) {
    Eigen::VectorXd z = spec.weights[l] * a + spec.biases[l];
    out.push_back(z);
    a = activate(act, std::move(z));
  }
  return out;
}

SubstitutionError substitution_error(const MlpSpec& spec, const FsParams& params,
                                     ActivationKind target,
                                     std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("substitution_error: empty inputs");
  const std::vector<double> exact = forward_mlp(spec, target, xs);
  const std::vector<double> approx = forward_mlp(spec, params, xs);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double diff = approx[i] - exact[i];
    abs_sum += std::abs(diff);
    sq_sum += diff * diff;
  }
  const double n = static_cast<double>(xs.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

NetworkRow network_row(Method method, std::size_t k,
                       const std::vector<SeedRun>& runs, ActivationKind target,
                       const NetworkProbe& probe) {
  const MlpSpec spec = build_mlp(probe.layer_sizes, probe.mlp_seed);
  const SampleGrid inputs = make_grid(probe.x_min, probe.x_max, probe.n_inputs);
  NetworkRow row;
  row.method = method;
  row.k = k;
  std::vector<double> maes;
  std::vector<double> rmses;
  for (const SeedRun& r : runs) {
    row.seeds.push_back(r.seed);
    if (r.diverged || !r.params) {
      ++row.excluded;
      row.per_seed_mae.push_back(std::nan(""));
      row.per_seed_rmse.push_back(std::nan(""));
      continue;
    }
    const SubstitutionError e = substitution_error(spec, *r.params, target, inputs.points);
    row.per_seed_mae.push_back(e.mae);
    row.per_seed_rmse.push_back(e.rmse);
    maes.push_back(e.mae);
    rmses.push_back(e.rmse);
  }
  auto stats = [](const std::vector<double>& xs, double& mean, double& se) {
    mean = std::nan("");
    se = 0.0;
    if (xs.empty()) return;
    double sum = 0.0;
    for (double x : xs) sum += x;
    mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
         std::sqrt(static_cast<double>(xs.size()));
  };
  stats(maes, row.mae_mean, row.mae_stderr);
  stats(rmses, row.rmse_mean, row.rmse_stderr);
  return row;
}

std::vector<NetworkRow> network_eval(const std::vector<std::size_t>& k_list,
                                     const TrainConfig& config,
                                     const std::vector<std::uint64_t>& seeds,
                                     Method method, const MethodOptions& options,
                                     const NetworkProbe& probe) {
  std::vector<NetworkRow> rows;
  for (std::size_t k : k_list) {
    rows.push_back(network_row(method, k, run_method(method, k, config, seeds, options),
                               config.target, probe));
  }
  return rows;
}

}  // namespace fsn
