#include "fsn/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace fsn {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSwish: return "swish";
    case ActivationKind::kGelu: return "gelu";
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kIdentity: return "identity";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  for (auto kind : {ActivationKind::kSwish, ActivationKind::kGelu,
                    ActivationKind::kSigmoid, ActivationKind::kRelu,
                    ActivationKind::kIdentity}) {
    if (name == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

double eval_activation(ActivationKind kind, double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("eval_activation: non-finite input");
  }
  switch (kind) {
    case ActivationKind::kSwish: return x * stable_sigmoid(x);
    case ActivationKind::kGelu:
      // erfc form avoids cancellation in 1 + erf(x / sqrt 2) for x << 0.
      return 0.5 * x * std::erfc(-x * M_SQRT1_2);
    case ActivationKind::kSigmoid: return stable_sigmoid(x);
    case ActivationKind::kRelu: return x > 0.0 ? x : 0.0;
    case ActivationKind::kIdentity: return x;
  }
  throw std::invalid_argument("eval_activation: bad kind");
}

std::vector<double> eval_activation(ActivationKind kind,
                                    std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(eval_activation(kind, x));
  return out;
}

SampleGrid make_grid(double x_min, double x_max, std::size_t n) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
    throw std::invalid_argument("make_grid: need finite x_min < x_max");
  }
  if (n < 2) throw std::invalid_argument("make_grid: need at least 2 points");
  SampleGrid grid;
  grid.x_min = x_min;
  grid.x_max = x_max;
  grid.points.resize(n);
  const double step = (x_max - x_min) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    grid.points[i] = x_min + step * static_cast<double>(i);
  }
  grid.points.back() = x_max;
  return grid;
}

SampleGrid default_grid() {
  return make_grid(kDefaultGridMin, kDefaultGridMax, kDefaultGridPoints);
}

}  // namespace fsn
