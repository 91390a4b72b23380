#ifndef FSN_TRAIN_HPP
#define FSN_TRAIN_HPP

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fsn/activation.hpp"
#include "fsn/curvefit.hpp"
#include "fsn/fs_neuron.hpp"

namespace fsn {

struct TrainConfig {
  SampleGrid grid = default_grid();
  std::size_t epochs = 20000;
  std::size_t batch_size = kDefaultGridPoints;  // full batch
  double learning_rate = 3e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double surrogate_width = 1.0;  // triangular kernel half-width, input units
  std::uint64_t seed = 1;
  ActivationKind target = ActivationKind::kSwish;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

// Deterministic derivation of independent RNG streams from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Mean squared error of the neuron against config.target on config.grid.
double loss(const FsParams& params, const TrainConfig& config);

struct Gradients {
  std::vector<double> dh;
  std::vector<double> dd;
  std::vector<double> dthr;

  // [dh..., dd..., dthr...], matching FsParams::flat().
  std::vector<double> flat() const;
};

// Triangular surrogate for the derivative of the spike step:
// max(0, 1 - |u| / width) / width with u = v - thr.
double surrogate_derivative(double u, double width);

// Gradient of the batch MSE (mean over `batch`, targets from config.target)
// with every spike's Heaviside derivative replaced by the surrogate.
Gradients backward(const FsParams& params, const TrainConfig& config,
                   std::span<const double> batch);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, const AdamHyper& hyper);

// h i.i.d. uniform on [0, 2]; d and thr i.i.d. uniform on [-2, 2].
FsParams init_random(std::size_t k, std::uint64_t seed);

// Source plus i.i.d. N(0, sigma^2) on every entry. sigma <= 0 throws.
FsParams init_gaussian_perturbed(const FsParams& source, double sigma,
                                 std::uint64_t seed);

struct TbpiResult {
  FsParams params;
  // Fitted curves for h, d, thr; empty when the source is too short to fit
  // (k < 3), in which case params is the source itself.
  std::optional<std::array<CurveModel, 3>> curves;
};

// Fits each of h, d, thr as a function of t = 1..source.k() and samples the
// fitted curves at t = 1..target_k (target_k defaults to source.k(); a larger
// value extrapolates). noise_sigma > 0 adds N(0, noise_sigma^2) to every
// sampled entry.
TbpiResult tbpi_init(const FsParams& source, const FitFamily& family,
                     std::optional<std::size_t> target_k = std::nullopt,
                     double noise_sigma = 0.0, std::uint64_t seed = 0);

struct RandomInit {};
struct GaussianInit {
  FsParams source;
  double sigma = 0.1;
};
struct TbpiInit {
  FsParams source;
  FitFamily family = FitFamily::exponential();
  double noise_sigma = 0.0;
};
using InitStrategy = std::variant<RandomInit, GaussianInit, TbpiInit>;

// Starting parameters for a strategy; random draws use streams of config.seed.
FsParams initial_params(const InitStrategy& init, std::size_t k,
                        const TrainConfig& config);

struct TrainHistory {
  // loss[e] is the full-grid loss of the parameters entering epoch e.
  std::vector<double> loss;
  double final_mse = 0.0;
  std::size_t best_epoch = 0;
  std::chrono::duration<double> wall_time{};
};

struct TrainResult {
  FsParams params;  // best-seen parameters
  TrainHistory history;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

// Adam on the surrogate gradient from the given starting point; returns the
// parameters with the lowest full-grid loss seen. Throws TrainingError on a
// non-finite loss.
TrainResult train_from(const FsParams& start, const TrainConfig& config);

TrainResult train_with_init(const InitStrategy& init, std::size_t k,
                            const TrainConfig& config);

// Training from random initial values.
TrainResult pretrain(std::size_t k, const TrainConfig& config);

}  // namespace fsn

#endif  // FSN_TRAIN_HPP
