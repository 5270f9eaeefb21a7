#include "trapent/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "trapent/error.hpp"
#include "trapent/specfun.hpp"

namespace trapent {
namespace {

constexpr double kPi = std::numbers::pi;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// log|A r U(alpha, 3/2, r^2)| and its sign, i.e. the relative amplitude
// with the gaussian removed. r >= 0.
struct LogAmplitude {
  double log_abs;
  int sign;
};

LogAmplitude log_regular_part(const EigenState& state, double r) {
  const double alpha = state.kummer_alpha();
  if (r == 0.0) {
    // r U(alpha, 3/2, r^2) -> Gamma(1/2) / Gamma(alpha)
    if (is_nonpositive_integer(alpha)) return {-INFINITY, 1};
    const auto lg = specfun::ln_gamma_signed(alpha);
    return {state.log_norm_const + 0.5 * std::log(kPi) - lg.magnitude, lg.sign};
  }
  const auto u = specfun::kummer_u_3half_scaled(alpha, r * r);
  if (u.mantissa == 0.0) return {-INFINITY, 1};
  return {state.log_norm_const + std::log(r) + std::log(std::abs(u.mantissa)) + u.log_scale,
          u.mantissa > 0.0 ? 1 : -1};
}

// log of int_0^inf (r U(alpha, 3/2, r^2) e^{-r^2/2})^2 dr, computed on
// Gauss-Legendre panels that resolve the 1/kappa scale of deep bound states.
double log_norm_integral(double energy) {
  EigenState probe;
  probe.energy = energy;
  probe.log_norm_const = 0.0;

  const double kappa = std::sqrt(std::max(1.0, -2.0 * energy));
  std::vector<double> edges{0.0};
  const double fine = 0.5 / kappa;
  if (fine < 0.25) {
    for (int i = 1; i <= 60; ++i) edges.push_back(i * fine);
  }
  // Past 30/kappa a deep state has dropped by e^{-60}.
  const double r_cut = fine < 0.25 ? edges.back() : 12.0;
  while (edges.back() < r_cut) edges.push_back(edges.back() + 0.5);

  const auto base = specfun::gauss_legendre(32);
  std::vector<double> log_terms;
  log_terms.reserve(edges.size() * 32);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const auto rule = base.mapped(edges[p], edges[p + 1]);
    for (int k = 0; k < rule.order; ++k) {
      const double r = rule.nodes[k];
      const auto amp = log_regular_part(probe, r);
      log_terms.push_back(2.0 * amp.log_abs - r * r + std::log(rule.weights[k]));
    }
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double sum = 0.0;
  for (double t : log_terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

EigenState make_state(int branch, double inv_a, double energy) {
  EigenState s;
  s.branch = branch;
  s.inv_a = inv_a;
  s.energy = energy;
  // 4 pi A^2 I = 1
  s.log_norm_const = -0.5 * (std::log(4.0 * kPi) + log_norm_integral(energy));
  s.norm_const = std::exp(s.log_norm_const);
  return s;
}

}  // namespace

double inv_a_of_energy(double energy) {
  if (!std::isfinite(energy)) throw DomainError("inv_a_of_energy: non-finite energy");
  const double nu = 0.75 - 0.5 * energy;
  const double z = nu - 0.5;
  if (is_nonpositive_integer(nu)) {
    std::ostringstream msg;
    msg << "inv_a_of_energy: E = " << energy
        << " belongs to the non-interacting pole family E = 3/2 + 2n (a = 0, 1/a diverges)";
    throw DomainError(msg.str());
  }
  if (is_nonpositive_integer(z)) return 0.0;
  const auto num = specfun::ln_gamma_signed(nu);
  const auto den = specfun::ln_gamma_signed(z);
  return 2.0 * num.sign * den.sign * std::exp(num.magnitude - den.magnitude);
}

double inv_a_slope(double energy) {
  const double nu = 0.75 - 0.5 * energy;
  const double z = nu - 0.5;
  if (is_nonpositive_integer(z)) {
    // (1/Gamma)'(-n) = (-1)^n n!
    const int n = static_cast<int>(-z);
    const double rg_slope = (n % 2 == 0 ? 1.0 : -1.0) * std::tgamma(n + 1.0);
    return -specfun::ln_gamma_signed(nu).value() * rg_slope;
  }
  const double value = inv_a_of_energy(energy);
  return -0.5 * value * (specfun::digamma(nu) - specfun::digamma(z));
}

BranchInterval branch_interval(int branch) {
  if (branch < 0) throw DomainError("branch must be non-negative");
  if (branch == 0) return {-INFINITY, 1.5};
  return {1.5 + 2.0 * (branch - 1), 1.5 + 2.0 * branch};
}

EigenState energy_of_inv_a(double inv_a, int branch, const SpectrumOptions& options) {
  if (!std::isfinite(inv_a)) throw DomainError("energy_of_inv_a: inv_a must be finite");
  if (branch < 0 || branch > options.branch_max) {
    std::ostringstream msg;
    msg << "energy_of_inv_a: branch " << branch << " outside supported range 0.."
        << options.branch_max;
    throw DomainError(msg.str());
  }
  // f is strictly decreasing on the branch interval, +inf -> -inf.
  auto f = [inv_a](double e) { return inv_a_of_energy(e) - inv_a; };

  auto [lo, hi] = branch_interval(branch);
  if (branch == 0) {
    lo = std::max(std::min(0.5, -2.0 * inv_a * inv_a) - 1.0, options.energy_floor);
    std::vector<std::string> trace;
    while (f(lo) <= 0.0) {
      trace.push_back("E_lo = " + std::to_string(lo) + " : f <= 0");
      if (lo <= options.energy_floor) {
        throw ConvergenceError(
            "energy_of_inv_a: branch-0 bracket reached the energy floor " +
                std::to_string(options.energy_floor) +
                "; lower SpectrumOptions::energy_floor for this inv_a",
            trace);
      }
      lo = std::max(2.0 * lo, options.energy_floor);
    }
  }

  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }

  // Safeguarded Newton polish.
  double e = 0.5 * (lo + hi);
  for (int it = 0; it < 60; ++it) {
    const double value = f(e);
    if (value == 0.0) break;
    (value > 0.0 ? lo : hi) = e;
    double next = e - value / inv_a_slope(e);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - e);
    e = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(e))) {
      break;
    }
  }
  return make_state(branch, inv_a, e);
}

EigenState noninteracting_state() {
  EigenState s;
  s.branch = 0;
  s.inv_a = -INFINITY;
  s.energy = 1.5;
  s.log_norm_const = -0.75 * std::log(kPi);
  s.norm_const = std::exp(s.log_norm_const);
  return s;
}

double reduced_rel(const EigenState& state, double r) {
  if (!(r >= 0.0)) throw DomainError("reduced_rel: r must be non-negative");
  const auto amp = log_regular_part(state, r);
  return amp.sign * std::exp(amp.log_abs - 0.5 * r * r);
}

double psi_rel(const EigenState& state, double r) {
  if (!(r > 0.0)) {
    std::ostringstream msg;
    msg << "psi_rel: r must be positive (got " << r << "); psi diverges as 1/r at contact";
    throw DomainError(msg.str());
  }
  const auto amp = log_regular_part(state, r);
  return amp.sign * std::exp(amp.log_abs - 0.5 * r * r - std::log(r));
}

double radial_density(const EigenState& state, double r) {
  const double u = reduced_rel(state, r);
  if (!(r > 0.0)) throw DomainError("radial_density: r must be positive");
  return 4.0 * kPi * u * u;
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

struct OdeState {
  double u;
  double du;
};

// RK4 for u'' = (r^2 - 2E) u from r0 to r1 (either direction), rescaling to
// keep the magnitude bounded; only the ratio u'/u is meaningful afterwards.
OdeState integrate(OdeState s, double r0, double r1, double energy, double step) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(r1 - r0) / step)));
  const double h = (r1 - r0) / n;
  auto accel = [energy](double r, double u) { return (r * r - 2.0 * energy) * u; };
  double r = r0;
  for (int i = 0; i < n; ++i) {
    const double k1u = s.du;
    const double k1v = accel(r, s.u);
    const double k2u = s.du + 0.5 * h * k1v;
    const double k2v = accel(r + 0.5 * h, s.u + 0.5 * h * k1u);
    const double k3u = s.du + 0.5 * h * k2v;
    const double k3v = accel(r + 0.5 * h, s.u + 0.5 * h * k2u);
    const double k4u = s.du + h * k3v;
    const double k4v = accel(r + h, s.u + h * k3u);
    s.u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    s.du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    r = r0 + (i + 1) * h;
    const double mag = std::max(std::abs(s.u), std::abs(s.du));
    if (mag > 1e100) {
      s.u *= 1e-100;
      s.du *= 1e-100;
    }
  }
  return s;
}

// Wronskian of the contact solution and the decaying solution at the
// matching radius. Zero exactly at eigenvalues.
double matching_wronskian(double inv_a, double energy, const ShootingOptions& opt) {
  const double r0 = opt.start_radius;
  const double g = inv_a;
  // Taylor start of u'' = (r^2 - 2E) u, u(0) = 1, u'(0) = -1/a.
  const double scale = 1.0 / std::max(1.0, std::abs(g));
  OdeState out{scale * (1.0 - g * r0 - energy * r0 * r0 + energy * g * r0 * r0 * r0 / 3.0),
               scale * (-g - 2.0 * energy * r0 + energy * g * r0 * r0)};
  out = integrate(out, r0, opt.match_radius, energy, opt.step);

  const double r_out = std::max(6.0, std::sqrt(std::max(0.0, 2.0 * energy)) + 6.0);
  OdeState in{1.0, (energy - 0.5) / r_out - r_out};
  in = integrate(in, r_out, opt.match_radius, energy, opt.step);

  const double norm_out = std::hypot(out.u, out.du);
  const double norm_in = std::hypot(in.u, in.du);
  return (out.u * in.du - out.du * in.u) / (norm_out * norm_in);
}

}  // namespace

double shooting_oracle(double inv_a, int branch, const ShootingOptions& options) {
  if (!std::isfinite(inv_a)) throw DomainError("shooting_oracle: inv_a must be finite");
  if (branch < 0) throw DomainError("shooting_oracle: branch must be non-negative");

  auto w = [&](double e) { return matching_wronskian(inv_a, e, options); };

  // Scan upward from below the free-dimer scale, counting sign changes.
  double e = std::max(options.energy_floor, -(inv_a > 0.0 ? inv_a * inv_a : 0.0) - 2.0);
  const double e_stop = 2.0 * branch + 4.0;
  double w_prev = w(e);
  int found = -1;
  std::vector<std::string> trace;
  while (e < e_stop) {
    const double next = e + std::max(0.1, 0.02 * std::abs(e));
    const double w_next = w(next);
    if ((w_prev > 0.0) != (w_next > 0.0)) {
      ++found;
      std::ostringstream note;
      note << "sign change #" << found << " in [" << e << ", " << next << "]";
      trace.push_back(note.str());
      if (found == branch) {
        double lo = e;
        double hi = next;
        const bool lo_positive = w_prev > 0.0;
        while (hi - lo > options.energy_tolerance) {
          const double mid = 0.5 * (lo + hi);
          ((w(mid) > 0.0) == lo_positive ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      }
    }
    e = next;
    w_prev = w_next;
  }
  throw ConvergenceError("shooting_oracle: matching scan found only " +
                             std::to_string(found + 1) + " eigenvalue(s) below E = " +
                             std::to_string(e_stop),
                         trace);
}

}  // namespace trapent
