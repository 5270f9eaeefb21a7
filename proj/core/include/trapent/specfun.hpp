#pragma once

// Real special functions and quadrature rules used throughout the library.
// Everything here is a pure function of its arguments.

#include <span>
#include <vector>

namespace trapent::specfun {

/// log|Gamma(x)| together with the sign of Gamma(x).
struct SignedLogGamma {
  double magnitude;
  int sign;

  double value() const;
};

/// Gamma(x) as (log|Gamma|, sign). Negative arguments go through the
/// reflection formula. Throws DomainError at the poles x = 0, -1, -2, ...
SignedLogGamma ln_gamma_signed(double x);

/// 1/Gamma(x); exactly zero at the poles of Gamma.
double rgamma(double x);

/// Digamma psi(x) = Gamma'(x)/Gamma(x). Throws DomainError at poles.
double digamma(double x);

/// Tricomi's confluent hypergeometric function U(alpha, 3/2, x) for x > 0.
///
/// Terminating cases (alpha or alpha - 1/2 a non-positive integer) are summed
/// exactly. Otherwise U is computed from its Laplace-integral representation
/// at a shifted parameter alpha + m >= 1, where the integrand is positive,
/// and brought back to alpha with the three-term recurrence in the first
/// parameter, run in its stable (decreasing) direction.
double kummer_u_3half(double alpha, double x);

/// mantissa * exp(log_scale); used where the plain value would under- or
/// overflow a double.
struct ScaledValue {
  double mantissa;
  double log_scale;

  double value() const;
};

/// kummer_u_3half with an explicit exponent, for large alpha where
/// U ~ 1/Gamma(alpha) underflows.
ScaledValue kummer_u_3half_scaled(double alpha, double x);

/// P_0(x) .. P_{l_max}(x) by the three-term recurrence. |x| <= 1.
std::vector<double> legendre_all(int l_max, double x);

/// Same as legendre_all but into caller storage; out.size() - 1 is l_max.
void legendre_fill(double x, std::span<double> out);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  /// Affine map of a rule on [-1, 1] onto [a, b].
  QuadratureRule mapped(double a, double b) const;
};

/// Gauss-Legendre rule of the given order on [-1, 1].
QuadratureRule gauss_legendre(int order);

/// Cached 64-point rule, the default everywhere in the library.
const QuadratureRule& gauss_legendre_64();

}  // namespace trapent::specfun
