#pragma once

// Two-particle s-wave states Psi(r1, r2) = Phi(R) psi(r) with the
// center of mass in its trap ground state. Every such state depends on the
// two radii and the angle gamma between the position vectors only, and
// factorizes as
//
//   Psi = exp(-(r1^2 + r2^2)) * G(r) / r,   r = |r1 - r2|,
//
// where the pair profile G is an entire function of r. The Legendre
// projection in schmidt.hpp works directly with G.

#include <memory>
#include <optional>
#include <string>

#include "trapent/spectrum.hpp"

namespace trapent {

/// Center-of-mass ground state 2 sqrt(2) exp(-2 R^2) / pi^{3/4}.
double com_ground(double R);

/// Closed-form eigenstates at |a| -> infinity, k = 0, 1, 2 (relative energies
/// 1/2, 5/2, 9/2):
///
///   Psi_1k = c_k / pi^{3/2} * exp(-r1^2 - r2^2) / r * B_k(r^2)
///
/// with c = (2, sqrt 2, sqrt(3/2)) and B = (1, 1 - 2x, 1 - 4x + 4x^2/3).
/// Throws DomainError at the coincidence point r = 0.
double unitarity_state(int k, double r1, double r2, double cos_gamma);

/// Bracket polynomial B_k(x) of unitarity_state, x = r^2.
double unitarity_bracket(int k, double x);

enum class StateKind { TrapEigenstate, Unitarity };

namespace detail {
class ProfileTable;
}

class TwoBodyState {
 public:
  /// Trap eigenstate; the pair profile is tabulated on [0, table_extent]
  /// and evaluated directly beyond it.
  static TwoBodyState trap(const EigenState& state, double table_extent = 8.0);
  static TwoBodyState unitarity(int k);

  StateKind kind() const { return kind_; }
  const std::optional<EigenState>& eigenstate() const { return eigenstate_; }
  int unitarity_index() const { return unitarity_k_; }
  std::string label() const;

  /// Psi(r1, r2, cos gamma). DomainError at the coincidence point.
  double operator()(double r1, double r2, double cos_gamma) const;

  /// G(r), see the file comment. r >= 0.
  double pair_profile(double r) const;

  /// G evaluated without the interpolation table (reference path).
  double pair_profile_direct(double r) const;

 private:
  TwoBodyState() = default;

  StateKind kind_ = StateKind::Unitarity;
  std::optional<EigenState> eigenstate_;
  int unitarity_k_ = 0;
  std::shared_ptr<const detail::ProfileTable> table_;
};

/// Same as state(r1, r2, cos_gamma).
double psi_full(const TwoBodyState& state, double r1, double r2, double cos_gamma);

}  // namespace trapent
