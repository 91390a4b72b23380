#ifndef FSN_NETWORK_HPP
#define FSN_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fsn/activation.hpp"
#include "fsn/eval.hpp"
#include "fsn/fs_neuron.hpp"

namespace fsn {

// Fixed multilayer perceptron used to measure what substituting FS neurons
// for an exact activation does to a network's output. The synaptic
// weights live here; the neuron only ever sees weighted sums.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;   // biases[l]: sizes[l+1]
  std::uint64_t seed = 0;

  std::size_t hidden_layers() const { return layer_sizes.size() - 2; }
};

// Weights U(-sqrt(3 / fan_in), +sqrt(3 / fan_in)), biases U(-0.5, 0.5).
// Throws std::invalid_argument for fewer than 2 layers or a zero size.
MlpSpec build_mlp(const std::vector<std::size_t>& layer_sizes,
                  std::uint64_t seed);

// Either an exact activation or one FS neuron shared by every hidden unit.
using HiddenActivation = std::variant<ActivationKind, FsParams>;

double apply_activation(const HiddenActivation& act, double z);

// Affine-then-activation on hidden layers, linear output layer.
Eigen::VectorXd forward_mlp(const MlpSpec& spec, const HiddenActivation& act,
                            const Eigen::VectorXd& input);

// Scalar-in, scalar-out networks ((1, ..., 1) layer sizes).
std::vector<double> forward_mlp(const MlpSpec& spec, const HiddenActivation& act,
                                std::span<const double> xs);

// Hidden pre-activations of every layer for one input, in layer order.
std::vector<Eigen::VectorXd> hidden_preactivations(const MlpSpec& spec,
                                                   const HiddenActivation& act,
                                                   const Eigen::VectorXd& input);

struct SubstitutionError {
  double mae = 0.0;
  double rmse = 0.0;
};

// Output deviation of the FS-activated network from the exact one over xs.
// Throws std::invalid_argument for empty xs.
SubstitutionError substitution_error(const MlpSpec& spec, const FsParams& params,
                                     ActivationKind target,
                                     std::span<const double> xs);

struct NetworkProbe {
  std::vector<std::size_t> layer_sizes = {1, 16, 16, 1};
  std::uint64_t mlp_seed = 1;
  double x_min = -4.0;
  double x_max = 4.0;
  std::size_t n_inputs = 256;
};

// Trains neurons with `method` for every (k, seed) and reports the
// substitution error of the probe network with each trained neuron.
std::vector<NetworkRow> network_eval(const std::vector<std::size_t>& k_list,
                                     const TrainConfig& config,
                                     const std::vector<std::uint64_t>& seeds,
                                     Method method,
                                     const MethodOptions& options = {},
                                     const NetworkProbe& probe = {});

// Same, from already-trained neurons (one per seed).
NetworkRow network_row(Method method, std::size_t k,
                       const std::vector<SeedRun>& runs, ActivationKind target,
                       const NetworkProbe& probe = {});

}  // namespace fsn

#endif  // FSN_NETWORK_HPP
