#include "fsn/curvefit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace fsn {

namespace {

void check_sequence(std::span<const double> seq) {
  for (double y : seq) {
    if (!std::isfinite(y)) throw std::domain_error("fit: non-finite entry");
  }
}

struct LinearFit {
  double a = 0.0;
  double c = 0.0;
  double sse = 0.0;
};

// Closed-form (a, c) minimizing sum (a r^t + c - y_t)^2 for fixed r.
LinearFit fit_amplitude(std::span<const double> seq, double r) {
  const std::size_t n = seq.size();
  std::vector<double> u(n);
  double pow_r = 1.0;
  double mean_u = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pow_r *= r;
    u[i] = pow_r;
    mean_u += pow_r;
    mean_y += seq[i];
  }
  mean_u /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double suu = 0.0;
  double suy = 0.0;
  double u2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double du = u[i] - mean_u;
    suu += du * du;
    suy += du * (seq[i] - mean_y);
    u2 += u[i] * u[i];
  }
  LinearFit f;
  // r^t is (numerically) constant in t: only the offset is identifiable.
  if (suu <= 1e-14 * u2) {
    f.a = 0.0;
  } else {
    f.a = suy / suu;
  }
  f.c = mean_y - f.a * mean_u;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = f.a * u[i] + f.c - seq[i];
    f.sse += res * res;
  }
  return f;
}

double exponential_sse(std::span<const double> seq, double a, double r,
                       double c) {
  double sse = 0.0;
  double pow_r = 1.0;
  for (double y : seq) {
    pow_r *= r;
    const double res = a * pow_r + c - y;
    sse += res * res;
  }
  return sse;
}

double rms(double sse, std::size_t n) {
  return std::sqrt(sse / static_cast<double>(n));
}

// Residuals through eval_curve, so residual_rms matches what callers see.
double model_sse(const CurveModel& m, std::span<const double> seq) {
  double sse = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const double res = eval_curve(m, static_cast<double>(i + 1)) - seq[i];
    sse += res * res;
  }
  return sse;
}

}  // namespace

std::size_t FitFamily::coefficient_count() const {
  switch (tag) {
    case Tag::kExponential: return 3;
    case Tag::kPolynomial: return degree + 1;
    case Tag::kAuto: return 0;
  }
  return 0;
}

std::string to_string(const FitFamily& family) {
  switch (family.tag) {
    case FitFamily::Tag::kExponential: return "exponential";
    case FitFamily::Tag::kPolynomial:
      return "poly" + std::to_string(family.degree);
    case FitFamily::Tag::kAuto: return "auto";
  }
  return "unknown";
}

FitFamily parse_fit_family(const std::string& name) {
  if (name == "exponential") return FitFamily::exponential();
  if (name == "auto") return FitFamily::automatic();
  if (name.size() > 4 && name.compare(0, 4, "poly") == 0) {
    const std::string digits = name.substr(4);
    if (std::all_of(digits.begin(), digits.end(),
                    [](char ch) { return ch >= '0' && ch <= '9'; })) {
      return FitFamily::polynomial(std::stoul(digits));
    }
  }
  throw std::invalid_argument("unknown fit family: " + name);
}

CurveModel fit_exponential(std::span<const double> seq) {
  const std::size_t n = seq.size();
  if (n < 3) throw std::invalid_argument("fit_exponential: need >= 3 points");
  check_sequence(seq);

  const double s_lo = std::log(kMinRatio);
  const double s_hi = std::log(kMaxRatio);
  auto objective = [&](double s) { return fit_amplitude(seq, std::exp(s)).sse; };

  // Coarse scan so golden section starts inside the global basin.
  constexpr int kScan = 256;
  int best_i = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / kScan;
    const double sse = objective(s);
    if (sse < best_sse) {
      best_sse = sse;
      best_i = i;
    }
  }
  const double step = (s_hi - s_lo) / kScan;
  double lo = std::max(s_lo, s_lo + (best_i - 1) * step);
  double hi = std::min(s_hi, s_lo + (best_i + 1) * step);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  for (int iter = 0; iter < 200; ++iter) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  double r = std::exp(f1 <= f2 ? x1 : x2);
  if (const double edge = std::exp(s_lo + best_i * step);
      objective(std::log(edge)) < objective(std::log(r))) {
    r = edge;
  }
  LinearFit lin = fit_amplitude(seq, r);
  double a = lin.a;
  double c = lin.c;
  double sse = lin.sse;

  // Damped Gauss-Newton polish on (a, r, c); golden section alone stalls at
  // sqrt(machine epsilon) in r.
  double damping = 1e-6;
  for (int iter = 0; iter < 100 && sse > 0.0; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    double pow_prev = 1.0;  // r^(t-1)
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i + 1);
      const double pow_t = pow_prev * r;
      const Eigen::Vector3d row(pow_t, a * t * pow_prev, 1.0);
      const double res = a * pow_t + c - seq[i];
      jtj += row * row.transpose();
      jtr += row * res;
      pow_prev = pow_t;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::Matrix3d lhs = jtj;
      for (int j = 0; j < 3; ++j) lhs(j, j) += damping * (1.0 + jtj(j, j));
      const Eigen::Vector3d delta = lhs.ldlt().solve(-jtr);
      const double na = a + delta(0);
      const double nr = std::clamp(r + delta(1), kMinRatio, kMaxRatio);
      const double nc = c + delta(2);
      const double nsse = exponential_sse(seq, na, nr, nc);
      if (std::isfinite(nsse) && nsse < sse) {
        a = na;
        r = nr;
        c = nc;
        sse = nsse;
        damping = std::max(damping * 0.1, 1e-12);
        improved = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) break;
  }

  CurveModel m;
  m.family = FitFamily::exponential();
  m.coefficients = {a, r, c};
  m.domain_k = n;
  m.residual_rms = rms(model_sse(m, seq), n);
  return m;
}

CurveModel fit_polynomial(std::span<const double> seq, std::size_t degree) {
  const std::size_t n = seq.size();
  if (degree >= n) {
    throw std::invalid_argument("fit_polynomial: degree must be < length");
  }
  check_sequence(seq);
  // Columns (t/n)^j keep the Vandermonde matrix well scaled.
  const double scale = static_cast<double>(n);
  Eigen::MatrixXd vander(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i + 1) / scale;
    double p = 1.0;
    for (std::size_t j = 0; j <= degree; ++j) {
      vander(i, j) = p;
      p *= u;
    }
    rhs(i) = seq[i];
  }
  const Eigen::VectorXd scaled = vander.householderQr().solve(rhs);

  CurveModel m;
  m.family = FitFamily::polynomial(degree);
  m.coefficients.resize(degree + 1);
  double factor = 1.0;
  for (std::size_t j = 0; j <= degree; ++j) {
    m.coefficients[j] = scaled(j) / factor;
    factor *= scale;
  }
  m.domain_k = n;
  m.residual_rms = rms(model_sse(m, seq), n);
  return m;
}

CurveModel fit_auto(std::span<const double> seq) {
  if (seq.size() < 3) throw std::invalid_argument("fit_auto: need >= 3 points");
  std::array<CurveModel, 3> candidates = {
      fit_polynomial(seq, 1), fit_exponential(seq), fit_polynomial(seq, 2)};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::min(best, c.residual_rms);
  const CurveModel* chosen = nullptr;
  for (const auto& c : candidates) {
    if (c.residual_rms > best + kAutoTieTolerance) continue;
    if (chosen == nullptr || c.family.coefficient_count() <
                                 chosen->family.coefficient_count()) {
      chosen = &c;
    }
  }
  return *chosen;
}

CurveModel fit(std::span<const double> seq, const FitFamily& family) {
  switch (family.tag) {
    case FitFamily::Tag::kExponential: return fit_exponential(seq);
    case FitFamily::Tag::kPolynomial: return fit_polynomial(seq, family.degree);
    case FitFamily::Tag::kAuto: return fit_auto(seq);
  }
  throw std::invalid_argument("fit: bad family");
}

double eval_curve(const CurveModel& model, double t) {
  if (!(t >= 1.0)) throw std::invalid_argument("eval_curve: t must be >= 1");
  const auto& c = model.coefficients;
  switch (model.family.tag) {
    case FitFamily::Tag::kExponential: return c[0] * std::pow(c[1], t) + c[2];
    case FitFamily::Tag::kPolynomial: {
      double acc = 0.0;
      for (std::size_t j = c.size(); j-- > 0;) acc = acc * t + c[j];
      return acc;
    }
    case FitFamily::Tag::kAuto: break;
  }
  throw std::invalid_argument("eval_curve: model has unresolved family");
}

}  // namespace fsn
