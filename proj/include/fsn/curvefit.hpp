#ifndef FSN_CURVEFIT_HPP
#define FSN_CURVEFIT_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fsn {

// Parametric family of functions of the time step t = 1, 2, ...
struct FitFamily {
  enum class Tag { kExponential, kPolynomial, kAuto };

  Tag tag = Tag::kAuto;
  std::size_t degree = 0;  // polynomial only

  static FitFamily exponential() { return {Tag::kExponential, 0}; }
  static FitFamily polynomial(std::size_t degree) {
    return {Tag::kPolynomial, degree};
  }
  static FitFamily automatic() { return {Tag::kAuto, 0}; }

  std::size_t coefficient_count() const;
  bool operator==(const FitFamily&) const = default;
};

// "exponential", "poly<N>" or "auto".
std::string to_string(const FitFamily& family);
FitFamily parse_fit_family(const std::string& name);

// A fitted curve. Coefficients are (a, r, c) for a * r^t + c, or
// (c0, c1, ..., cn) for c0 + c1 t + ... + cn t^n.
struct CurveModel {
  FitFamily family;
  std::vector<double> coefficients;
  double residual_rms = 0.0;
  std::size_t domain_k = 0;
};

// Exponential search range for r.
inline constexpr double kMinRatio = 1e-3;
inline constexpr double kMaxRatio = 4.0;

// Least squares a * r^t + c over t = 1..n with r in (0, 4]. Golden-section
// search over log r (after a coarse scan to pick the basin) with (a, c)
// eliminated in closed form, then damped Gauss-Newton on all three
// coefficients. Throws std::invalid_argument if n < 3 and std::domain_error
// on non-finite entries.
CurveModel fit_exponential(std::span<const double> seq);

// Least squares polynomial in t via Householder QR of the scaled
// Vandermonde matrix. Throws std::invalid_argument if degree >= n.
CurveModel fit_polynomial(std::span<const double> seq, std::size_t degree);

// Best of {poly1, exponential, poly2} by residual_rms; candidates within
// kAutoTieTolerance of the best are resolved toward fewer coefficients
// (then in the listed order).
inline constexpr double kAutoTieTolerance = 1e-9;
CurveModel fit_auto(std::span<const double> seq);

// Dispatches on family.tag.
CurveModel fit(std::span<const double> seq, const FitFamily& family);

// Value of the model at step t >= 1 (t may exceed domain_k).
double eval_curve(const CurveModel& model, double t);

}  // namespace fsn

#endif  // FSN_CURVEFIT_HPP
