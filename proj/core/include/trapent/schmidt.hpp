#pragma once

// Schmidt decomposition of exchange-symmetric two-particle states that
// depend on (r1, r2, cos gamma) only.
//
// The state is expanded in Legendre channels,
//   Psi = sum_l alpha_l(r1, r2) P_l(cos gamma),
// and the addition theorem turns each channel into a (2l+1)-fold set of
// spherical-harmonic pairs (l, m) <-> (l, -m) with equal weight. What is left
// is the radial Schmidt decomposition of the symmetric kernel
// r1 r2 alpha_l(r1, r2) = sum_n sigma_nl u_nl(r1) u_nl(r2), lambda_nl = sigma^2.
//
// With q_nlm = 16 pi^2 lambda_nl / (2l+1)^2 the probability of one Schmidt
// pair, the reported quantities are
//   Lambda_nl = 16 pi^2 lambda_nl / (2l+1)^{3/2}   (K = 1 / sum Lambda^2)
//   p_nl      = 16 pi^2 lambda_nl / (2l+1)          (weight of the m-manifold)
//   S         = -sum_nl (2l+1) q_nlm ln q_nlm       (natural log)

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "trapent/wavefunction.hpp"

namespace trapent {

/// Midpoint grid r_i = (i + 1/2) dr, i = 0..N-1, N dr = r_max.
class RadialGrid {
 public:
  RadialGrid(double dr = 0.01, double r_max = 3.5);

  double dr() const { return dr_; }
  double r_max() const { return r_max_; }
  int size() const { return size_; }
  double point(int i) const { return (i + 0.5) * dr_; }
  std::vector<double> points() const;

  RadialGrid refined() const { return RadialGrid(0.5 * dr_, r_max_); }

 private:
  double dr_;
  double r_max_;
  int size_;
};

struct ChannelDecomposition {
  int l = 0;
  double dr = 0.0;
  /// r_i r_j alpha_l(r_i, r_j)
  Eigen::MatrixXd kernel;
  /// Schmidt eigenvalues lambda_nl, non-increasing.
  std::vector<double> lambdas;
  /// Signed eigenvalues sigma_n of kernel * dr, |sigma_n| = sqrt(lambda_n).
  std::vector<double> sigmas;
  /// Columns are u_nl on the grid, sum_i u^2 dr = 1, first significant
  /// sample positive. Empty when modes were not requested.
  Eigen::MatrixXd modes;
};

struct SpectrumEntry {
  int n = 1;  ///< 1-based radial index within the channel
  int l = 0;
  double lambda = 0.0;
  double big_lambda = 0.0;
  double channel_prob = 0.0;

  /// Probability of each of the 2l+1 (l, m) Schmidt pairs.
  double per_m_probability() const;
};

struct SchmidtSpectrum {
  std::vector<SpectrumEntry> entries;  ///< ordered by l, then n
  double K = 1.0;
  double S = 0.0;
  double completeness_defect = 0.0;
  bool completeness_ok = true;
  int l_max = 0;
  double dr = 0.0;
  double r_max = 0.0;

  const SpectrumEntry* find(int n, int l) const;
  /// Entries sorted by channel probability, largest first.
  std::vector<SpectrumEntry> ranked() const;
};

struct SchmidtOptions {
  double dr = 0.01;
  double r_max = 3.5;
  int l_max = 30;
  /// Drop lambda below keep_floor * max lambda.
  double keep_floor = 1e-12;
  /// |1 - sum p_nl| above this marks the spectrum incomplete.
  double completeness_bound = 1e-3;
  bool compute_modes = true;
  int jobs = 1;
};

/// alpha_l(r_i, r_j) on the grid, via the exact change of variable from gamma
/// to the pair separation r and 64-point Gauss-Legendre on [|r_i-r_j|, r_i+r_j].
Eigen::MatrixXd project_legendre(const TwoBodyState& state, int l, const RadialGrid& grid);

/// Channels l_lo..l_hi in one pass; element k holds alpha_{l_lo + k}.
std::vector<Eigen::MatrixXd> project_legendre_range(const TwoBodyState& state, int l_lo,
                                                    int l_hi, const RadialGrid& grid,
                                                    int jobs = 1);

/// Decompose a symmetric kernel r_i r_j alpha_l(r_i, r_j) sampled with
/// spacing dr.
ChannelDecomposition decompose_kernel(Eigen::MatrixXd kernel, double dr, int l,
                                      bool compute_modes = true, double keep_floor = 1e-12);

/// Form r_i r_j alpha_l from alpha_l and decompose.
ChannelDecomposition decompose_channel(const Eigen::MatrixXd& alpha_l, const RadialGrid& grid,
                                       int l, bool compute_modes = true,
                                       double keep_floor = 1e-12);

SchmidtSpectrum assemble_spectrum(std::span<const ChannelDecomposition> channels,
                                  double keep_floor = 1e-12, double completeness_bound = 1e-3);

/// K = 1 / sum Lambda_nl^2.
double schmidt_number(const SchmidtSpectrum& spectrum);

/// K = 1 / sum p_j^2 for a plain list of Schmidt probabilities.
double schmidt_number(std::span<const double> probabilities);

/// |u_nl(r_i)|^2 for the n-th (1-based) mode of a channel.
std::vector<double> mode_density(const ChannelDecomposition& channel, int n);

/// Project, decompose and assemble at fixed resolution.
struct Decomposition {
  SchmidtSpectrum spectrum;
  std::vector<ChannelDecomposition> channels;
};
Decomposition decompose_state(const TwoBodyState& state, const SchmidtOptions& options = {});

struct ConvergenceTolerances {
  double tol_k = 1e-3;     ///< relative change of K between l_max steps
  double tol_grid = 1e-2;  ///< relative change of K when dr is halved
  int l_step = 5;
  int l_cap = 60;
  bool check_grid = true;
  bool compute_modes = false;
  int jobs = 1;
};

struct ConvergenceStep {
  int l_max;
  double dr;
  double K;
  double completeness_defect;
};

struct ConvergenceReport {
  std::vector<ConvergenceStep> trace;
  /// Smallest l_max whose K already agreed with the next step.
  int l_max_converged = 0;
  bool grid_checked = false;
  bool grid_converged = false;
  double grid_relative_change = 0.0;
};

struct ConvergenceResult {
  Decomposition decomposition;
  ConvergenceReport report;
};

/// Raise l_max in steps until K settles, then halve dr once to confirm.
/// Throws ConvergenceError (with the K trace) when l_cap is reached.
ConvergenceResult converge(const TwoBodyState& state, const RadialGrid& base_grid, int l_start,
                           const ConvergenceTolerances& tolerances = {});

}  // namespace trapent
