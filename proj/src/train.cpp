#include "fsn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace fsn {

namespace {

// Fused forward + reverse-time surrogate recurrence for one sample.
// Accumulates into grads (flat layout) and returns the squared error.
// `upstream_scale` is the factor turning (y - f) into dL/dy.
double accumulate_sample(const FsParams& p, double x, double target,
                         double width, double upstream_scale,
                         std::vector<double>& v, std::vector<std::uint8_t>& s,
                         double* dh, double* dd, double* dthr) {
  const std::size_t k = p.k();
  const auto& h = p.h();
  const auto& d = p.d();
  const auto& thr = p.thr();
  double vt = x;
  double y = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    v[t] = vt;
    s[t] = vt >= thr[t];
    if (s[t]) {
      vt -= h[t];
      y += d[t];
    }
  }
  const double err = y - target;
  const double e = upstream_scale * err;
  double g = 0.0;  // dL/dv[t + 1]
  for (std::size_t t = k; t-- > 0;) {
    const double psi = surrogate_derivative(v[t] - thr[t], width);
    const double a = e * d[t] - g * h[t];
    if (s[t]) {
      dd[t] += e;
      dh[t] -= g;
    }
    dthr[t] -= a * psi;
    g += a * psi;
  }
  return err * err;
}

}  // namespace

void TrainConfig::validate() const {
  if (grid.size() < 2 || !(grid.x_min < grid.x_max)) {
    throw std::invalid_argument("TrainConfig: invalid grid");
  }
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1 || batch_size > grid.size()) {
    throw std::invalid_argument("TrainConfig: batch_size must be in [1, grid n]");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  }
  if (!(surrogate_width > 0.0)) {
    throw std::invalid_argument("TrainConfig: surrogate_width must be > 0");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw std::invalid_argument("TrainConfig: invalid Adam hyperparameters");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double loss(const FsParams& params, const TrainConfig& config) {
  double sum = 0.0;
  for (double x : config.grid.points) {
    const double r = forward_value(params, x) - eval_activation(config.target, x);
    sum += r * r;
  }
  return sum / static_cast<double>(config.grid.size());
}

std::vector<double> Gradients::flat() const {
  std::vector<double> out;
  out.reserve(dh.size() * 3);
  out.insert(out.end(), dh.begin(), dh.end());
  out.insert(out.end(), dd.begin(), dd.end());
  out.insert(out.end(), dthr.begin(), dthr.end());
  return out;
}

double surrogate_derivative(double u, double width) {
  const double z = 1.0 - std::abs(u) / width;
  return z > 0.0 ? z / width : 0.0;
}

Gradients backward(const FsParams& params, const TrainConfig& config,
                   std::span<const double> batch) {
  const std::size_t k = params.k();
  Gradients g{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
              std::vector<double>(k, 0.0)};
  if (batch.empty()) return g;
  std::vector<double> v(k);
  std::vector<std::uint8_t> s(k);
  const double scale = 2.0 / static_cast<double>(batch.size());
  for (double x : batch) {
    accumulate_sample(params, x, eval_activation(config.target, x),
                      config.surrogate_width, scale, v, s, g.dh.data(),
                      g.dd.data(), g.dthr.data());
  }
  return g;
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, const AdamHyper& hyper) {
  if (state.m.size() != params.size() || grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(hyper.beta1, t);
  const double corr2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / corr1;
    const double v_hat = state.v[i] / corr2;
    params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

FsParams init_random(std::size_t k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("init_random: k must be >= 1");
  std::mt19937_64 rng(seed);
  // h stays positive so the membrane potential only decreases on a spike;
  // signed d and thr let negative inputs fire into negative outputs
  std::uniform_real_distribution<double> reset(0.0, 2.0);
  std::uniform_real_distribution<double> signed_dist(-2.0, 2.0);
  std::vector<double> h(k), d(k), thr(k);
  for (std::size_t t = 0; t < k; ++t) {
    h[t] = reset(rng);
    d[t] = signed_dist(rng);
    thr[t] = signed_dist(rng);
  }
  return FsParams(std::move(h), std::move(d), std::move(thr));
}

FsParams init_gaussian_perturbed(const FsParams& source, double sigma,
                                 std::uint64_t seed) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("init_gaussian_perturbed: sigma must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> flat = source.flat();
  for (double& x : flat) x += noise(rng);
  return FsParams::from_flat(flat);
}

TbpiResult tbpi_init(const FsParams& source, const FitFamily& family,
                     std::optional<std::size_t> target_k, double noise_sigma,
                     std::uint64_t seed) {
  const std::size_t k_out = target_k.value_or(source.k());
  if (k_out < 1) throw std::invalid_argument("tbpi_init: target k must be >= 1");
  if (noise_sigma < 0.0 || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument("tbpi_init: noise_sigma must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  auto jitter = [&](std::vector<double> seq) {
    if (noise_sigma > 0.0) {
      for (double& x : seq) x += noise(rng);
    }
    return seq;
  };

  if (source.k() < 3) {
    if (k_out != source.k()) {
      throw std::invalid_argument(
          "tbpi_init: cannot extrapolate from fewer than 3 steps");
    }
    return {FsParams(jitter(source.h()), jitter(source.d()),
                     jitter(source.thr())),
            std::nullopt};
  }

  std::array<CurveModel, 3> curves = {fit(source.h(), family),
                                      fit(source.d(), family),
                                      fit(source.thr(), family)};
  std::array<std::vector<double>, 3> sampled;
  for (std::size_t j = 0; j < 3; ++j) {
    sampled[j].resize(k_out);
    for (std::size_t t = 0; t < k_out; ++t) {
      sampled[j][t] = eval_curve(curves[j], static_cast<double>(t + 1));
    }
    sampled[j] = jitter(std::move(sampled[j]));
  }
  return {FsParams(std::move(sampled[0]), std::move(sampled[1]),
                   std::move(sampled[2])),
          curves};
}

FsParams initial_params(const InitStrategy& init, std::size_t k,
                        const TrainConfig& config) {
  if (const auto* g = std::get_if<GaussianInit>(&init)) {
    if (g->source.k() != k) {
      throw std::invalid_argument("GaussianInit: source k does not match k");
    }
    return init_gaussian_perturbed(g->source, g->sigma, derive_seed(config.seed, 1));
  }
  if (const auto* t = std::get_if<TbpiInit>(&init)) {
    return tbpi_init(t->source, t->family, k, t->noise_sigma,
                     derive_seed(config.seed, 2))
        .params;
  }
  return init_random(k, config.seed);
}

TrainResult train_from(const FsParams& start, const TrainConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t k = start.k();
  const std::size_t n = config.grid.size();
  const bool full_batch = config.batch_size == n;

  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    targets[i] = eval_activation(config.target, config.grid.points[i]);
  }

  std::vector<double> flat = start.flat();
  FsParams current = start;
  FsParams best = start;
  AdamState adam(flat.size());
  const AdamHyper hyper{config.learning_rate, config.adam_beta1,
                        config.adam_beta2, config.adam_eps};
  std::vector<double> grads(flat.size());
  std::vector<double> v(k);
  std::vector<std::uint8_t> s(k);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 3));

  TrainHistory history;
  history.loss.reserve(config.epochs);
  double best_loss = std::numeric_limits<double>::infinity();

  auto step_on = [&](std::span<const std::size_t> idx) {
    std::fill(grads.begin(), grads.end(), 0.0);
    const double scale = 2.0 / static_cast<double>(idx.size());
    double sse = 0.0;
    for (std::size_t i : idx) {
      sse += accumulate_sample(current, config.grid.points[i], targets[i],
                               config.surrogate_width, scale, v, s,
                               grads.data(), grads.data() + k,
                               grads.data() + 2 * k);
    }
    adam_step(adam, flat, grads, hyper);
    return sse;
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (full_batch) {
      epoch_loss = step_on(order) / static_cast<double>(n);
    } else {
      epoch_loss = loss(current, config);
    }
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("training diverged: non-finite loss at epoch " +
                              std::to_string(epoch),
                          epoch);
    }
    history.loss.push_back(epoch_loss);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = current;
      history.best_epoch = epoch;
    }
    if (!full_batch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t b = 0; b < n; b += config.batch_size) {
        const std::size_t e = std::min(n, b + config.batch_size);
        step_on(std::span<const std::size_t>(order).subspan(b, e - b));
        current = FsParams::from_flat(flat);
      }
    }
    for (double x : flat) {
      if (!std::isfinite(x)) {
        throw TrainingError("training diverged: non-finite parameter after epoch " +
                                std::to_string(epoch),
                            epoch);
      }
    }
    current = FsParams::from_flat(flat);
  }
  history.final_mse = best_loss;
  history.wall_time = std::chrono::steady_clock::now() - t0;
  return {best, history};
}

TrainResult train_with_init(const InitStrategy& init, std::size_t k,
                            const TrainConfig& config) {
  config.validate();
  return train_from(initial_params(init, k, config), config);
}

TrainResult pretrain(std::size_t k, const TrainConfig& config) {
  return train_with_init(RandomInit{}, k, config);
}

}  // namespace fsn
