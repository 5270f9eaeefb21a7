#include "trapent/schmidt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "trapent/parallel.hpp"
#include "trapent/error.hpp"
#include "trapent/specfun.hpp"

namespace trapent {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSixteenPiSq = 16.0 * kPi * kPi;

}  // namespace

RadialGrid::RadialGrid(double dr, double r_max) : dr_(dr), r_max_(r_max) {
  if (!(dr > 0.0) || !std::isfinite(dr)) throw DomainError("grid spacing dr must be positive");
  if (!(r_max > dr) || !std::isfinite(r_max)) throw DomainError("r_max must exceed dr");
  const double n = r_max / dr;
  size_ = static_cast<int>(std::lround(n));
  if (std::abs(n - size_) > 1e-9 * n) {
    std::ostringstream msg;
    msg << "r_max = " << r_max << " is not an integer multiple of dr = " << dr;
    throw DomainError(msg.str());
  }
}

std::vector<double> RadialGrid::points() const {
  std::vector<double> out(size_);
  for (int i = 0; i < size_; ++i) out[i] = point(i);
  return out;
}

double SpectrumEntry::per_m_probability() const {
  const double d = 2.0 * l + 1.0;
  return kSixteenPiSq * lambda / (d * d);
}

const SpectrumEntry* SchmidtSpectrum::find(int n, int l) const {
  for (const auto& e : entries) {
    if (e.n == n && e.l == l) return &e;
  }
  return nullptr;
}

std::vector<SpectrumEntry> SchmidtSpectrum::ranked() const {
  auto out = entries;
  std::stable_sort(out.begin(), out.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
    return a.channel_prob > b.channel_prob;
  });
  return out;
}

std::vector<Eigen::MatrixXd> project_legendre_range(const TwoBodyState& state, int l_lo,
                                                    int l_hi, const RadialGrid& grid, int jobs) {
  if (l_lo < 0 || l_hi < l_lo) throw DomainError("invalid Legendre channel range");
  const int n = grid.size();
  const int channels = l_hi - l_lo + 1;
  std::vector<Eigen::MatrixXd> alpha(channels, Eigen::MatrixXd::Zero(n, n));
  const auto& gl = specfun::gauss_legendre_64();
  const int q = gl.order;

  // alpha_l(r_i, r_j) = (2l+1) / (2 r_i r_j) e^{-(r_i^2 + r_j^2)}
  //                     * int_{|r_i - r_j|}^{r_i + r_j} G(r) P_l(x(r)) dr,
  // x(r) = (r_i^2 + r_j^2 - r^2) / (2 r_i r_j).
  detail::parallel_for(n, jobs, [&](int i) {
    std::vector<double> g(q);
    std::vector<double> x(q);
    std::vector<double> sums(l_hi + 1);
    std::vector<double> p(static_cast<std::size_t>(l_hi) + 1);
    const double ri = grid.point(i);
    for (int j = i; j < n; ++j) {
      const double rj = grid.point(j);
      const double lower = std::abs(ri - rj);
      const double upper = ri + rj;
      const double half = 0.5 * (upper - lower);
      const double mid = 0.5 * (upper + lower);
      const double sq = ri * ri + rj * rj;
      const double inv_two_rr = 1.0 / (2.0 * ri * rj);
      for (int k = 0; k < q; ++k) {
        const double r = mid + half * gl.nodes[k];
        g[k] = state.pair_profile(r) * half * gl.weights[k];
        x[k] = std::clamp((sq - r * r) * inv_two_rr, -1.0, 1.0);
      }
      std::fill(sums.begin(), sums.end(), 0.0);
      for (int k = 0; k < q; ++k) {
        specfun::legendre_fill(x[k], p);
        for (int l = l_lo; l <= l_hi; ++l) sums[l] += g[k] * p[l];
      }
      const double envelope = std::exp(-sq) * inv_two_rr;
      for (int l = l_lo; l <= l_hi; ++l) {
        const double value = (2.0 * l + 1.0) * envelope * sums[l];
        alpha[l - l_lo](i, j) = value;
        alpha[l - l_lo](j, i) = value;
      }
    }
  });
  return alpha;
}

Eigen::MatrixXd project_legendre(const TwoBodyState& state, int l, const RadialGrid& grid) {
  return std::move(project_legendre_range(state, l, l, grid).front());
}

ChannelDecomposition decompose_kernel(Eigen::MatrixXd kernel, double dr, int l,
                                      bool compute_modes, double keep_floor) {
  if (kernel.rows() != kernel.cols()) throw DomainError("kernel must be square");
  if (!(dr > 0.0)) throw DomainError("dr must be positive");
  ChannelDecomposition out;
  out.l = l;
  out.dr = dr;

  const Eigen::MatrixXd weighted = kernel * dr;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      weighted, compute_modes ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "decompose_kernel: eigensolver failed for l = " << l << " (N = " << kernel.rows()
        << ", max |entry| = " << weighted.cwiseAbs().maxCoeff() << ")";
    throw ConvergenceError(msg.str(), {});
  }
  const Eigen::VectorXd& eig = solver.eigenvalues();
  const int n = static_cast<int>(eig.size());

  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(eig[a]) > std::abs(eig[b]); });

  const double top = n > 0 ? eig[order[0]] * eig[order[0]] : 0.0;
  std::vector<int> kept;
  for (int k : order) {
    const double lambda = eig[k] * eig[k];
    if (lambda < keep_floor * top || lambda == 0.0) break;
    kept.push_back(k);
    out.lambdas.push_back(lambda);
    out.sigmas.push_back(eig[k]);
  }

  if (compute_modes) {
    out.modes.resize(kernel.rows(), static_cast<Eigen::Index>(kept.size()));
    const double inv_sqrt_dr = 1.0 / std::sqrt(dr);
    for (std::size_t c = 0; c < kept.size(); ++c) {
      Eigen::VectorXd u = solver.eigenvectors().col(kept[c]) * inv_sqrt_dr;
      const double peak = u.cwiseAbs().maxCoeff();
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) > 1e-8 * peak) {
          if (u[i] < 0.0) u = -u;
          break;
        }
      }
      out.modes.col(static_cast<Eigen::Index>(c)) = u;
    }
  }
  out.kernel = std::move(kernel);
  return out;
}

ChannelDecomposition decompose_channel(const Eigen::MatrixXd& alpha_l, const RadialGrid& grid,
                                       int l, bool compute_modes, double keep_floor) {
  if (alpha_l.rows() != grid.size() || alpha_l.cols() != grid.size()) {
    throw DomainError("alpha_l does not match the grid size");
  }
  Eigen::VectorXd radii(grid.size());
  for (int i = 0; i < grid.size(); ++i) radii[i] = grid.point(i);
  Eigen::MatrixXd kernel = radii.asDiagonal() * alpha_l * radii.asDiagonal();
  return decompose_kernel(std::move(kernel), grid.dr(), l, compute_modes, keep_floor);
}

SchmidtSpectrum assemble_spectrum(std::span<const ChannelDecomposition> channels,
                                  double keep_floor, double completeness_bound) {
  SchmidtSpectrum out;
  if (channels.empty()) throw DomainError("assemble_spectrum: no channels");
  out.dr = channels.front().dr;
  out.l_max = 0;

  double lambda_max = 0.0;
  for (const auto& ch : channels) {
    if (!ch.lambdas.empty()) lambda_max = std::max(lambda_max, ch.lambdas.front());
    out.l_max = std::max(out.l_max, ch.l);
  }

  double total_prob = 0.0;
  double sum_sq = 0.0;
  double entropy = 0.0;
  for (const auto& ch : channels) {
    const double d = 2.0 * ch.l + 1.0;
    for (std::size_t k = 0; k < ch.lambdas.size(); ++k) {
      const double lambda = ch.lambdas[k];
      if (lambda < keep_floor * lambda_max) break;
      SpectrumEntry e;
      e.n = static_cast<int>(k) + 1;
      e.l = ch.l;
      e.lambda = lambda;
      e.big_lambda = kSixteenPiSq * lambda / std::pow(d, 1.5);
      e.channel_prob = kSixteenPiSq * lambda / d;
      const double q = e.per_m_probability();
      total_prob += e.channel_prob;
      sum_sq += e.big_lambda * e.big_lambda;
      if (q > 0.0) entropy -= d * q * std::log(q);
      out.entries.push_back(e);
    }
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const SpectrumEntry& a, const SpectrumEntry& b) {
                     return a.l != b.l ? a.l < b.l : a.n < b.n;
                   });
  out.K = 1.0 / sum_sq;
  out.S = entropy;
  out.completeness_defect = 1.0 - total_prob;
  out.completeness_ok = std::abs(out.completeness_defect) <= completeness_bound;
  return out;
}

double schmidt_number(const SchmidtSpectrum& spectrum) {
  double sum_sq = 0.0;
  for (const auto& e : spectrum.entries) sum_sq += e.big_lambda * e.big_lambda;
  return 1.0 / sum_sq;
}

double schmidt_number(std::span<const double> probabilities) {
  double sum_sq = 0.0;
  for (double p : probabilities) sum_sq += p * p;
  return 1.0 / sum_sq;
}

std::vector<double> mode_density(const ChannelDecomposition& channel, int n) {
  if (n < 1 || n > channel.modes.cols()) {
    std::ostringstream msg;
    msg << "mode_density: mode n = " << n << " not retained for l = " << channel.l << " (have "
        << channel.modes.cols() << ")";
    throw DomainError(msg.str());
  }
  const auto col = channel.modes.col(n - 1);
  std::vector<double> out(static_cast<std::size_t>(col.size()));
  for (Eigen::Index i = 0; i < col.size(); ++i) out[i] = col[i] * col[i];
  return out;
}

namespace {

std::vector<ChannelDecomposition> decompose_range(const TwoBodyState& state, int l_lo, int l_hi,
                                                  const RadialGrid& grid, bool modes,
                                                  double keep_floor, int jobs) {
  auto alpha = project_legendre_range(state, l_lo, l_hi, grid, jobs);
  std::vector<ChannelDecomposition> out(alpha.size());
  detail::parallel_for(static_cast<int>(alpha.size()), jobs, [&](int k) {
    out[k] = decompose_channel(alpha[k], grid, l_lo + k, modes, keep_floor);
    alpha[k].resize(0, 0);
  });
  return out;
}

}  // namespace

Decomposition decompose_state(const TwoBodyState& state, const SchmidtOptions& options) {
  if (options.l_max < 0) throw DomainError("l_max must be non-negative");
  const RadialGrid grid(options.dr, options.r_max);
  Decomposition out;
  out.channels = decompose_range(state, 0, options.l_max, grid, options.compute_modes,
                                 options.keep_floor, options.jobs);
  out.spectrum = assemble_spectrum(out.channels, options.keep_floor, options.completeness_bound);
  out.spectrum.r_max = grid.r_max();
  return out;
}

ConvergenceResult converge(const TwoBodyState& state, const RadialGrid& base_grid, int l_start,
                           const ConvergenceTolerances& tol) {
  if (!(tol.tol_k > 0.0) || !(tol.tol_grid > 0.0)) {
    throw DomainError("convergence tolerances must be positive");
  }
  if (l_start < 0 || tol.l_step < 1) throw DomainError("invalid l_start or l_step");

  ConvergenceResult result;
  auto& report = result.report;
  auto& channels = result.decomposition.channels;
  constexpr double kFloor = 1e-12;

  auto extend = [&](int l_hi) {
    const int l_lo = channels.empty() ? 0 : channels.back().l + 1;
    auto more = decompose_range(state, l_lo, l_hi, base_grid, tol.compute_modes, kFloor, tol.jobs);
    for (auto& ch : more) {
      if (!tol.compute_modes) ch.kernel.resize(0, 0);
      channels.push_back(std::move(ch));
    }
    auto spectrum = assemble_spectrum(channels, kFloor);
    spectrum.r_max = base_grid.r_max();
    report.trace.push_back({l_hi, base_grid.dr(), spectrum.K, spectrum.completeness_defect});
    return spectrum;
  };

  int l = l_start;
  auto spectrum = extend(l);
  bool settled = false;
  while (!settled) {
    if (l + tol.l_step > tol.l_cap) {
      std::vector<std::string> trace;
      for (const auto& s : report.trace) {
        std::ostringstream line;
        line << "l_max=" << s.l_max << " dr=" << s.dr << " K=" << s.K;
        trace.push_back(line.str());
      }
      throw ConvergenceError("converge: K not settled within l_max cap " +
                                 std::to_string(tol.l_cap),
                             trace);
    }
    const double previous = spectrum.K;
    l += tol.l_step;
    spectrum = extend(l);
    if (std::abs(spectrum.K - previous) <= tol.tol_k * std::abs(spectrum.K)) {
      settled = true;
      report.l_max_converged = l - tol.l_step;
    }
  }
  result.decomposition.spectrum = spectrum;

  if (tol.check_grid) {
    SchmidtOptions fine;
    fine.dr = base_grid.refined().dr();
    fine.r_max = base_grid.r_max();
    fine.l_max = l;
    fine.compute_modes = false;
    fine.jobs = tol.jobs;
    const auto refined = decompose_state(state, fine).spectrum;
    report.trace.push_back({l, fine.dr, refined.K, refined.completeness_defect});
    report.grid_checked = true;
    report.grid_relative_change = std::abs(refined.K - spectrum.K) / std::abs(spectrum.K);
    report.grid_converged = report.grid_relative_change <= tol.tol_grid;
  }
  return result;
}

}  // namespace trapent
