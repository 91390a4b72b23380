#include "fsn/fs_neuron.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fsn {

namespace {

void check_finite(const std::vector<double>& xs, const char* name) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string("FsParams: non-finite entry in ") +
                                  name);
    }
  }
}

void check_input(double x) {
  if (!std::isfinite(x)) throw std::domain_error("forward: non-finite input");
}

// Depth-first walk of the spike-decision tree restricted to [lo, hi).
// `offset` is the total reset subtracted so far, so v[t] = x - offset
// (up to rounding; pieces are labelled through forward_value, never through
// this affine shortcut).
void split(const FsParams& p, std::size_t t, double lo, double hi,
           double offset, std::vector<double>& cuts) {
  if (t == p.k()) return;
  const double cross = p.thr()[t] + offset;
  if (cross <= lo) {
    split(p, t + 1, lo, hi, offset + p.h()[t], cuts);
  } else if (cross >= hi) {
    split(p, t + 1, lo, hi, offset, cuts);
  } else {
    split(p, t + 1, lo, cross, offset, cuts);
    cuts.push_back(cross);
    split(p, t + 1, cross, hi, offset + p.h()[t], cuts);
  }
}

}  // namespace

FsParams::FsParams(std::vector<double> h, std::vector<double> d,
                   std::vector<double> thr)
    : h_(std::move(h)), d_(std::move(d)), thr_(std::move(thr)) {
  if (h_.empty()) throw std::invalid_argument("FsParams: k must be >= 1");
  if (d_.size() != h_.size() || thr_.size() != h_.size()) {
    throw std::invalid_argument("FsParams: h, d, thr lengths differ");
  }
  check_finite(h_, "h");
  check_finite(d_, "d");
  check_finite(thr_, "thr");
}

FsParams FsParams::binary(std::size_t k) {
  std::vector<double> seq(k);
  for (std::size_t t = 0; t < k; ++t) {
    seq[t] = std::ldexp(1.0, static_cast<int>(k - 1 - t));
  }
  return FsParams(seq, seq, seq);
}

FsParams FsParams::from_flat(std::span<const double> flat) {
  if (flat.empty() || flat.size() % 3 != 0) {
    throw std::invalid_argument("FsParams::from_flat: size must be 3k");
  }
  const std::size_t k = flat.size() / 3;
  return FsParams({flat.begin(), flat.begin() + k},
                  {flat.begin() + k, flat.begin() + 2 * k},
                  {flat.begin() + 2 * k, flat.end()});
}

std::vector<double> FsParams::flat() const {
  std::vector<double> out;
  out.reserve(3 * k());
  out.insert(out.end(), h_.begin(), h_.end());
  out.insert(out.end(), d_.begin(), d_.end());
  out.insert(out.end(), thr_.begin(), thr_.end());
  return out;
}

ForwardResult forward(const FsParams& params, double x) {
  check_input(x);
  const std::size_t k = params.k();
  ForwardResult r;
  r.trace.v.resize(k + 1);
  r.trace.s.resize(k);
  double v = x;
  double y = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    r.trace.v[t] = v;
    if (v >= params.thr()[t]) {
      r.trace.s[t] = 1;
      v -= params.h()[t];
      y += params.d()[t];
    }
  }
  r.trace.v[k] = v;
  r.y = y;
  return r;
}

double forward_value(const FsParams& params, double x) {
  check_input(x);
  const auto& h = params.h();
  const auto& d = params.d();
  const auto& thr = params.thr();
  double v = x;
  double y = 0.0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    if (v >= thr[t]) {
      v -= h[t];
      y += d[t];
    }
  }
  return y;
}

std::vector<double> forward_batch(const FsParams& params,
                                  std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(forward_value(params, x));
  return out;
}

double StepFunction::operator()(double x) const {
  // First breakpoint strictly greater than x; breakpoints belong upward.
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

StepFunction to_step_function(const FsParams& params, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw std::invalid_argument("to_step_function: need finite lo < hi");
  }
  std::vector<double> cuts;
  split(params, 0, lo, hi, 0.0, cuts);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  StepFunction sf;
  sf.lo = lo;
  sf.hi = hi;
  // Label each piece by evaluating the neuron itself at the piece's
  // midpoint, so rounding in the affine crossing points cannot mislabel it.
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const double a = i == 0 ? lo : cuts[i - 1];
    const double b = i == cuts.size() ? hi : cuts[i];
    const double value = forward_value(params, a + 0.5 * (b - a));
    if (!sf.values.empty() && sf.values.back() == value) {
      sf.breakpoints.pop_back();
    } else {
      sf.values.push_back(value);
    }
    if (i < cuts.size()) sf.breakpoints.push_back(cuts[i]);
  }
  return sf;
}

double exact_mse(const FsParams& params, ActivationKind kind, double lo,
                 double hi) {
  return exact_mse(
      params, [kind](double x) { return eval_activation(kind, x); }, lo, hi);
}

double exact_mse(const FsParams& params,
                 const std::function<double(double)>& target, double lo,
                 double hi) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double kRelTol = 1e-8;
  const StepFunction sf = to_step_function(params, lo, hi);

  double total = 0.0;
  double total_err = 0.0;
  std::size_t worst_piece = 0;
  double worst_err = 0.0;
  for (std::size_t i = 0; i < sf.piece_count(); ++i) {
    const double a = sf.piece_lo(i);
    const double b = sf.piece_hi(i);
    if (!(a < b)) continue;
    const double c = sf.values[i];
    double err = 0.0;
    const double piece = Quad::integrate(
        [&](double x) {
          const double r = c - target(x);
          return r * r;
        },
        a, b, 20, 1e-13, &err);
    total += piece;
    total_err += err;
    if (err > worst_err) {
      worst_err = err;
      worst_piece = i;
    }
  }
  if (!std::isfinite(total) || total_err > kRelTol * std::max(total, 1e-300)) {
    if (!(total_err <= 1e-30)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "exact_mse: quadrature error estimate " << total_err
          << " exceeds tolerance for integral " << total << " over "
          << sf.piece_count() << " pieces; worst piece " << worst_piece << " ["
          << sf.piece_lo(worst_piece) << ", " << sf.piece_hi(worst_piece)
          << ") with error " << worst_err;
      throw NumericError(msg.str());
    }
  }
  return total / (hi - lo);
}

}  // namespace fsn
