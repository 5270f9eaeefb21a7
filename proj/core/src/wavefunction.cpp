#include "trapent/wavefunction.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "trapent/error.hpp"

namespace trapent {
namespace {

constexpr double kPi = std::numbers::pi;
const double kComPrefactor = 2.0 * std::sqrt(2.0) / std::pow(kPi, 0.75);

double unitarity_prefactor(int k) {
  static const double c[3] = {2.0, std::sqrt(2.0), std::sqrt(1.5)};
  return c[k] / std::pow(kPi, 1.5);
}

void check_unitarity_index(int k) {
  if (k < 0 || k > 2) {
    throw DomainError("unitarity state index must be 0, 1 or 2 (got " + std::to_string(k) +
                      ")");
  }
}

// |r1 - r2| from the radii and the cosine of the angle between them.
double separation(double r1, double r2, double cos_gamma) {
  if (!(r1 >= 0.0) || !(r2 >= 0.0)) throw DomainError("radii must be non-negative");
  if (!(std::abs(cos_gamma) <= 1.0)) {
    throw DomainError("cos(gamma) must lie in [-1, 1]");
  }
  const double r_sq = std::max(0.0, r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * cos_gamma);
  const double r = std::sqrt(r_sq);
  if (r == 0.0) {
    std::ostringstream msg;
    msg << "two-body state evaluated at the coincidence point r1 = r2 = " << r1
        << ", cos(gamma) = " << cos_gamma << " where it diverges as 1/|r1 - r2|";
    throw DomainError(msg.str());
  }
  return r;
}

// e^{r^2/2} r psi(r) Phi(R = 0), the trap-eigenstate pair profile.
double trap_profile(const EigenState& s, double r) {
  return kComPrefactor * std::exp(0.5 * r * r) * reduced_rel(s, r);
}

}  // namespace

namespace detail {

// Piecewise Chebyshev interpolant of an entire function on [0, extent].
class ProfileTable {
 public:
  static constexpr int kDegree = 24;
  static constexpr double kPanel = 0.25;

  template <class F>
  ProfileTable(F&& f, double extent) : extent_(extent) {
    panels_ = static_cast<int>(std::ceil(extent / kPanel));
    coeffs_.assign(static_cast<std::size_t>(panels_) * (kDegree + 1), 0.0);
    std::vector<double> samples(kDegree + 1);
    for (int p = 0; p < panels_; ++p) {
      const double a = p * kPanel;
      for (int j = 0; j <= kDegree; ++j) {
        const double t = std::cos(kPi * (j + 0.5) / (kDegree + 1));
        samples[j] = f(a + 0.5 * kPanel * (t + 1.0));
      }
      for (int k = 0; k <= kDegree; ++k) {
        double c = 0.0;
        for (int j = 0; j <= kDegree; ++j) {
          c += samples[j] * std::cos(kPi * k * (j + 0.5) / (kDegree + 1));
        }
        coeffs_[p * (kDegree + 1) + k] = c * (k == 0 ? 1.0 : 2.0) / (kDegree + 1);
      }
    }
  }

  double extent() const { return extent_; }

  double operator()(double r) const {
    int p = static_cast<int>(r / kPanel);
    if (p >= panels_) p = panels_ - 1;
    const double t = (r - p * kPanel) * (2.0 / kPanel) - 1.0;
    const double* c = &coeffs_[p * (kDegree + 1)];
    // Clenshaw
    double b1 = 0.0;
    double b2 = 0.0;
    for (int k = kDegree; k >= 1; --k) {
      const double b0 = 2.0 * t * b1 - b2 + c[k];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + c[0];
  }

 private:
  double extent_;
  int panels_ = 0;
  std::vector<double> coeffs_;
};

}  // namespace detail

double com_ground(double R) {
  if (!(R >= 0.0)) throw DomainError("com_ground: R must be non-negative");
  return kComPrefactor * std::exp(-2.0 * R * R);
}

double unitarity_bracket(int k, double x) {
  check_unitarity_index(k);
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return 1.0 - 2.0 * x;
    default:
      return 1.0 - 4.0 * x + 4.0 / 3.0 * x * x;
  }
}

double unitarity_state(int k, double r1, double r2, double cos_gamma) {
  check_unitarity_index(k);
  const double r = separation(r1, r2, cos_gamma);
  return unitarity_prefactor(k) * std::exp(-r1 * r1 - r2 * r2) / r *
         unitarity_bracket(k, r * r);
}

TwoBodyState TwoBodyState::trap(const EigenState& state, double table_extent) {
  if (!(table_extent > 0.0)) throw DomainError("table extent must be positive");
  TwoBodyState s;
  s.kind_ = StateKind::TrapEigenstate;
  s.eigenstate_ = state;
  s.table_ = std::make_shared<const detail::ProfileTable>(
      [&state](double r) { return trap_profile(state, r); }, table_extent);
  return s;
}

TwoBodyState TwoBodyState::unitarity(int k) {
  check_unitarity_index(k);
  TwoBodyState s;
  s.kind_ = StateKind::Unitarity;
  s.unitarity_k_ = k;
  return s;
}

std::string TwoBodyState::label() const {
  std::ostringstream out;
  if (kind_ == StateKind::Unitarity) {
    out << "unitarity k=" << unitarity_k_;
  } else {
    out << "trap branch=" << eigenstate_->branch << " inv_a=" << eigenstate_->inv_a
        << " E=" << eigenstate_->energy;
  }
  return out.str();
}

double TwoBodyState::pair_profile_direct(double r) const {
  if (kind_ == StateKind::Unitarity) {
    return unitarity_prefactor(unitarity_k_) * unitarity_bracket(unitarity_k_, r * r);
  }
  return trap_profile(*eigenstate_, r);
}

double TwoBodyState::pair_profile(double r) const {
  if (table_ && r >= 0.0 && r <= table_->extent()) return (*table_)(r);
  return pair_profile_direct(r);
}

double TwoBodyState::operator()(double r1, double r2, double cos_gamma) const {
  if (kind_ == StateKind::Unitarity) return unitarity_state(unitarity_k_, r1, r2, cos_gamma);
  const double r = separation(r1, r2, cos_gamma);
  return std::exp(-r1 * r1 - r2 * r2) * pair_profile(r) / r;
}

double psi_full(const TwoBodyState& state, double r1, double r2, double cos_gamma) {
  return state(r1, r2, cos_gamma);
}

}  // namespace trapent
