#pragma once

// Relative-motion s-wave eigenproblem of two atoms in an isotropic trap with
// a regularized contact interaction.
//
// Units: energy in hbar*omega, length in the relative-motion oscillator
// length sqrt(hbar / (mu omega)), mu = m/2. The eigenvalue condition is
//
//   1/a = 2 Gamma(3/4 - E/2) / Gamma(1/4 - E/2)
//
// and the eigenfunction is psi(r) = A exp(-r^2/2) U(3/4 - E/2, 3/2, r^2).

#include <limits>
#include <string_view>

namespace trapent {

/// Human-readable name of the eigenvalue condition, stamped into outputs.
inline constexpr std::string_view kEigenConditionVariant =
    "1/a = 2*Gamma(3/4-E/2)/Gamma(1/4-E/2)";

struct EigenState {
  int branch = 0;      ///< 0, 1, 2, ... counted from the lowest curve
  double inv_a = 0.0;  ///< inverse scattering length
  double energy = 0.0;
  double norm_const = 0.0;      ///< A; may overflow to inf for very deep states
  double log_norm_const = 0.0;  ///< log A, always finite

  double kummer_alpha() const { return 0.75 - 0.5 * energy; }
};

struct SpectrumOptions {
  int branch_max = 3;
  /// Lowest energy the branch-0 bracket is allowed to reach.
  double energy_floor = -1.0e4;
};

/// Inverse scattering length for which E is an s-wave eigenvalue. Returns
/// exactly 0 at the unitarity energies E = 1/2 + 2n. Throws DomainError at
/// the non-interacting energies E = 3/2 + 2n, where 1/a diverges.
double inv_a_of_energy(double energy);

/// d(1/a)/dE, finite everywhere off the E = 3/2 + 2n family.
double inv_a_slope(double energy);

/// Open energy interval (lower, upper) that holds branch b. For branch 0 the
/// lower end is -infinity.
struct BranchInterval {
  double lower;
  double upper;
};
BranchInterval branch_interval(int branch);

/// Solve the eigenvalue condition on one branch and normalize the state.
/// Throws ConvergenceError if the branch-0 bracket would have to extend
/// below options.energy_floor.
EigenState energy_of_inv_a(double inv_a, int branch, const SpectrumOptions& options = {});

/// The a = 0 ground state, psi = pi^{-3/4} exp(-r^2/2), E = 3/2.
EigenState noninteracting_state();

/// Normalized relative wavefunction psi(r), r > 0.
double psi_rel(const EigenState& state, double r);

/// r * psi(r), finite at the contact point. r >= 0.
double reduced_rel(const EigenState& state, double r);

/// 4 pi r^2 psi(r)^2.
double radial_density(const EigenState& state, double r);

struct ShootingOptions {
  double step = 1e-4;
  double start_radius = 1e-4;
  double match_radius = 1.0;
  double energy_tolerance = 1e-10;
  double energy_floor = -1.0e4;
};

/// Energy from direct integration of u'' = (r^2 - 2E) u with the contact
/// condition u ~ 1 - r/a at the origin, matched against the decaying
/// solution integrated inward. Independent of the Gamma-function route.
double shooting_oracle(double inv_a, int branch, const ShootingOptions& options = {});

}  // namespace trapent
