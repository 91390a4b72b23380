#ifndef FSN_FS_NEURON_HPP
#define FSN_FS_NEURON_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsn/activation.hpp"

namespace fsn {

// Per-time-step parameters of one few-spikes neuron.
//   h:   amount subtracted from the membrane potential when step t spikes
//   d:   output weight contributed by a spike at step t
//   thr: firing threshold at step t
// All three sequences have length k() >= 1 and finite entries; the
// constructor enforces this and the object is immutable afterwards.
class FsParams {
 public:
  FsParams(std::vector<double> h, std::vector<double> d,
           std::vector<double> thr);

  // h = d = thr = (2^(k-1), ..., 2, 1): a greedy binary quantizer whose
  // output is floor(x) on [0, 2^k).
  static FsParams binary(std::size_t k);

  // Layout [h..., d..., thr...], the order used by the optimizer.
  static FsParams from_flat(std::span<const double> flat);
  std::vector<double> flat() const;

  std::size_t k() const { return h_.size(); }
  const std::vector<double>& h() const { return h_; }
  const std::vector<double>& d() const { return d_; }
  const std::vector<double>& thr() const { return thr_; }

  bool operator==(const FsParams&) const = default;

 private:
  std::vector<double> h_;
  std::vector<double> d_;
  std::vector<double> thr_;
};

// v[0] is the input; v[t + 1] = v[t] - s[t] * h[t].
struct SpikeTrace {
  std::vector<double> v;
  std::vector<std::uint8_t> s;
};

struct ForwardResult {
  double y = 0.0;
  SpikeTrace trace;
};

// Runs the k-step dynamics. A step spikes when v[t] >= thr[t].
// Throws std::domain_error for non-finite x.
ForwardResult forward(const FsParams& params, double x);

// Output only; same arithmetic as forward(), no trace allocation.
double forward_value(const FsParams& params, double x);

std::vector<double> forward_batch(const FsParams& params,
                                  std::span<const double> xs);

// Piecewise-constant form of x -> forward_value(params, x) on [lo, hi].
// values[i] holds on [breakpoints[i-1], breakpoints[i]); a breakpoint
// belongs to the piece above it.
struct StepFunction {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> breakpoints;
  std::vector<double> values;

  double operator()(double x) const;
  std::size_t piece_count() const { return values.size(); }
  double piece_lo(std::size_t i) const { return i == 0 ? lo : breakpoints[i - 1]; }
  double piece_hi(std::size_t i) const {
    return i == breakpoints.size() ? hi : breakpoints[i];
  }
};

// Exact breakpoints via recursive interval splitting; adjacent pieces with
// identical output are merged. Throws std::invalid_argument unless lo < hi.
StepFunction to_step_function(const FsParams& params, double lo, double hi);

// Raised when adaptive quadrature cannot meet its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (1 / (hi - lo)) * integral over [lo, hi] of (fhat(x) - f(x))^2, integrated
// piece by piece with adaptive Gauss-Kronrod quadrature to relative error
// 1e-8.
double exact_mse(const FsParams& params, ActivationKind kind, double lo,
                 double hi);
double exact_mse(const FsParams& params,
                 const std::function<double(double)>& target, double lo,
                 double hi);

}  // namespace fsn

#endif  // FSN_FS_NEURON_HPP
