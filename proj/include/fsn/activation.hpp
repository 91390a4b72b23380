#ifndef FSN_ACTIVATION_HPP
#define FSN_ACTIVATION_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsn {

// Target nonlinearities an FS neuron can be trained to approximate.
enum class ActivationKind { kSwish, kGelu, kSigmoid, kRelu, kIdentity };

std::string_view to_string(ActivationKind kind);

// Accepts the lower-case names produced by to_string ("swish", "gelu", ...).
// Throws std::invalid_argument for anything else.
ActivationKind parse_activation(std::string_view name);

// f(x) for the given kind. Stable for large |x| (no overflow in exp).
// Throws std::domain_error for non-finite x.
double eval_activation(ActivationKind kind, double x);

std::vector<double> eval_activation(ActivationKind kind,
                                    std::span<const double> xs);

// Uniform sampling of a closed interval, endpoints included.
struct SampleGrid {
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<double> points;

  std::size_t size() const { return points.size(); }
  double spacing() const {
    return (x_max - x_min) / static_cast<double>(points.size() - 1);
  }
};

// Throws std::invalid_argument unless x_min < x_max (both finite) and n >= 2.
SampleGrid make_grid(double x_min, double x_max, std::size_t n);

inline constexpr double kDefaultGridMin = -8.0;
inline constexpr double kDefaultGridMax = 8.0;
inline constexpr std::size_t kDefaultGridPoints = 2048;

SampleGrid default_grid();

}  // namespace fsn

#endif  // FSN_ACTIVATION_HPP
