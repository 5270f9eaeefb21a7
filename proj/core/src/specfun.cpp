#include "trapent/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "trapent/error.hpp"

namespace trapent::specfun {
namespace {

constexpr double kPi = std::numbers::pi;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

[[noreturn]] void throw_gamma_pole(const char* fn, double x) {
  std::ostringstream msg;
  msg << fn << ": Gamma has a pole at x = " << x
      << " (non-positive integers are poles)";
  throw DomainError(msg.str());
}

// sin(pi x) with the argument reduced exactly, so that values near large
// integers keep full relative accuracy.
double sin_pi(double x) {
  double r = std::fmod(x, 2.0);  // exact
  if (r > 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  if (r > 0.5) r = 1.0 - r;
  if (r < -0.5) r = -1.0 - r;
  return std::sin(kPi * r);
}

double cos_pi(double x) { return sin_pi(x + 0.5); }

// Bernoulli-number coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,         -1.0 / 360.0,       1.0 / 1260.0,        -1.0 / 1680.0,
    1.0 / 1188.0,       -691.0 / 360360.0,  1.0 / 156.0,         -3617.0 / 122400.0};

// B_{2k} / (2k) for the digamma asymptotic series.
constexpr std::array<double, 8> kDigamma = {
    1.0 / 12.0,    -1.0 / 120.0,      1.0 / 252.0,   -1.0 / 240.0,
    1.0 / 132.0,   -691.0 / 32760.0,  1.0 / 12.0,    -3617.0 / 8160.0};

constexpr double kShift = 12.0;

// log Gamma(x) for x > 0: shift up to x >= kShift, then Stirling.
double ln_gamma_positive(double x) {
  double log_product = 0.0;
  double product = 1.0;
  while (x < kShift) {
    product *= x;
    x += 1.0;
  }
  log_product = std::log(product);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv;
  for (double c : kStirling) {
    series += c * power;
    power *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * kPi) + series -
         log_product;
}

double digamma_positive(double x) {
  double acc = 0.0;
  while (x < kShift) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  double power = inv2;
  for (double c : kDigamma) {
    series += c * power;
    power *= inv2;
  }
  return acc + std::log(x) - 0.5 / x - series;
}

// ---------------------------------------------------------------------------
// Kummer U(a, 3/2, x)

constexpr double kB = 1.5;

using Scaled = ScaledValue;

// Exact sum of the terminating asymptotic series
//   U(a,b,x) = x^{-a} sum_k (a)_k (a-b+1)_k / k! (-1/x)^k.
double kummer_u_terminating(double a, double x, int k_max) {
  const double c = a - kB + 1.0;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < k_max; ++k) {
    term *= -(a + k) * (c + k) / ((k + 1) * x);
    sum += term;
  }
  return sum * std::pow(x, -a);
}

// log of the integrand of U(a,b,x) Gamma(a) = int_0^inf e^{-xt} t^{a-1}
// (1+t)^{b-a-1} dt after t = e^u (so dt = t du).
struct LaplaceIntegrand {
  double a;
  double x;
  double operator()(double u) const {
    const double t = std::exp(u);
    return -x * t + a * u + (kB - a - 1.0) * std::log1p(t);
  }
  double slope(double u) const {
    const double t = std::exp(u);
    return -x * t + a + (kB - a - 1.0) * t / (1.0 + t);
  }
  double curvature(double u) const {
    const double t = std::exp(u);
    return -x * t + (kB - a - 1.0) * t / ((1.0 + t) * (1.0 + t));
  }
};

// For a >= 1 the integrand in u is smooth and unimodal, so the trapezoid
// rule converges geometrically. Step is halved until two successive sums
// agree to near machine precision.
Scaled kummer_u_laplace(double a, double x) {
  const LaplaceIntegrand phi{a, x};

  // slope is strictly decreasing from a > 0 to -inf: bracket then bisect.
  double lo = std::log(a / x) - 1.0;
  double hi = lo + 2.0;
  while (phi.slope(lo) < 0.0) lo -= 2.0;
  while (phi.slope(hi) > 0.0) hi += 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi.slope(mid) > 0.0 ? lo : hi) = mid;
  }
  const double u_peak = 0.5 * (lo + hi);
  const double phi_peak = phi(u_peak);
  const double width = 1.0 / std::sqrt(-phi.curvature(u_peak));

  // Extent where the integrand exceeds e^{-45} of its peak.
  constexpr double kDrop = 45.0;
  double left = u_peak;
  double step = width;
  while (phi(left) - phi_peak > -kDrop) left -= step, step *= 1.5;
  double right = u_peak;
  step = width;
  while (phi(right) - phi_peak > -kDrop) right += step, step *= 1.5;

  auto weight = [&](double u) { return std::exp(phi(u) - phi_peak); };

  // Trapezoid on a lattice anchored at the peak.
  double h = std::min(0.5, 0.5 * width);
  double sum = 0.0;
  for (double u = u_peak; u <= right; u += h) sum += weight(u);
  for (double u = u_peak - h; u >= left; u -= h) sum += weight(u);
  double estimate = h * sum;
  // Rounding in phi(u) - phi_peak sets the floor on attainable accuracy.
  const double t_peak = std::exp(u_peak);
  const double phi_noise =
      std::numeric_limits<double>::epsilon() *
      (std::abs(a * u_peak) + x * t_peak + std::abs((kB - a - 1.0) * std::log1p(t_peak)));
  const double tolerance = std::max(1e-14, 8.0 * phi_noise);
  for (int level = 0; level < 12; ++level) {
    // add midpoints
    double extra = 0.0;
    for (double u = u_peak + 0.5 * h; u <= right; u += h) extra += weight(u);
    for (double u = u_peak - 0.5 * h; u >= left; u -= h) extra += weight(u);
    sum += extra;
    h *= 0.5;
    const double refined = h * sum;
    const bool done = std::abs(refined - estimate) <= tolerance * refined;
    estimate = refined;
    if (done && level >= 1) break;
  }
  const double log_scale = phi_peak - ln_gamma_positive(a);
  return {estimate, log_scale};
}

}  // namespace

double SignedLogGamma::value() const { return sign * std::exp(magnitude); }

double ScaledValue::value() const { return mantissa * std::exp(log_scale); }

SignedLogGamma ln_gamma_signed(double x) {
  if (!std::isfinite(x)) throw DomainError("ln_gamma_signed: non-finite argument");
  if (is_nonpositive_integer(x)) throw_gamma_pole("ln_gamma_signed", x);
  if (x > 0.0) return {ln_gamma_positive(x), 1};
  // Gamma(x) = pi / (sin(pi x) Gamma(1 - x))
  const double s = sin_pi(x);
  return {std::log(kPi) - std::log(std::abs(s)) - ln_gamma_positive(1.0 - x),
          s > 0.0 ? 1 : -1};
}

double rgamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  const auto lg = ln_gamma_signed(x);
  return lg.sign * std::exp(-lg.magnitude);
}

double digamma(double x) {
  if (!std::isfinite(x)) throw DomainError("digamma: non-finite argument");
  if (is_nonpositive_integer(x)) throw_gamma_pole("digamma", x);
  if (x > 0.0) return digamma_positive(x);
  // psi(x) = psi(1 - x) - pi cot(pi x)
  return digamma_positive(1.0 - x) - kPi * cos_pi(x) / sin_pi(x);
}

double kummer_u_3half(double alpha, double x) {
  return kummer_u_3half_scaled(alpha, x).value();
}

ScaledValue kummer_u_3half_scaled(double alpha, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << "kummer_u_3half: x must be positive and finite (got " << x
        << "); U(a, 3/2, x) is singular at the origin";
    throw DomainError(msg.str());
  }
  if (!std::isfinite(alpha)) throw DomainError("kummer_u_3half: non-finite alpha");

  const double c = alpha - kB + 1.0;
  if (is_nonpositive_integer(alpha) || is_nonpositive_integer(c)) {
    const double a_terms = is_nonpositive_integer(alpha) ? -alpha : INFINITY;
    const double c_terms = is_nonpositive_integer(c) ? -c : INFINITY;
    return {kummer_u_terminating(alpha, x, static_cast<int>(std::min(a_terms, c_terms))),
            0.0};
  }
  if (alpha >= 1.0) return kummer_u_laplace(alpha, x);

  // Downward recurrence from a0 = alpha + m in [1, 2):
  //   U(a-1) = (x + 2a - b) U(a) - a (a - b + 1) U(a+1)
  const int m = static_cast<int>(std::ceil(1.0 - alpha));
  double a = alpha + m;
  double upper = kummer_u_laplace(a + 1.0, x).value();
  double current = kummer_u_laplace(a, x).value();
  for (int k = 0; k < m; ++k) {
    const double lower = (x + 2.0 * a - kB) * current - a * (a - kB + 1.0) * upper;
    upper = current;
    current = lower;
    a -= 1.0;
  }
  return {current, 0.0};
}

void legendre_fill(double x, std::span<double> out) {
  if (!(std::abs(x) <= 1.0)) {
    std::ostringstream msg;
    msg << "legendre: |x| must not exceed 1 (got " << x << ")";
    throw DomainError(msg.str());
  }
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t l = 2; l < out.size(); ++l) {
    const double dl = static_cast<double>(l);
    out[l] = ((2.0 * dl - 1.0) * x * out[l - 1] - (dl - 1.0) * out[l - 2]) / dl;
  }
}

std::vector<double> legendre_all(int l_max, double x) {
  if (l_max < 0) throw DomainError("legendre_all: l_max must be non-negative");
  std::vector<double> p(static_cast<std::size_t>(l_max) + 1);
  legendre_fill(x, p);
  return p;
}

QuadratureRule QuadratureRule::mapped(double a, double b) const {
  QuadratureRule out;
  out.order = order;
  out.nodes.resize(nodes.size());
  out.weights.resize(weights.size());
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.nodes[i] = mid + half * nodes[i];
    out.weights[i] = half * weights[i];
  }
  return out;
}

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be at least 1");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.assign(order, 0.0);
  rule.weights.assign(order, 0.0);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double derivative = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      derivative = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / derivative;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    derivative = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * derivative * derivative);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

const QuadratureRule& gauss_legendre_64() {
  static const QuadratureRule rule = gauss_legendre(64);
  return rule;
}

}  // namespace trapent::specfun
