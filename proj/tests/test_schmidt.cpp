#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles/reduced_density.hpp"
#include "trapent/error.hpp"
#include "trapent/schmidt.hpp"
#include "trapent/specfun.hpp"

using namespace trapent;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

// alpha_l(r1, r2) = (2l+1)/2 int_0^pi Psi P_l(cos g) sin g dg by GSL adaptive
// quadrature in the original angle variable. The integrand stays bounded
// at g = 0 even when r1 = r2, and GSL never samples the endpoint.
double alpha_gsl(const TwoBodyState& s, int l, double r1, double r2) {
  struct P {
    const TwoBodyState* s;
    int l;
    double r1, r2;
  } p{&s, l, r1, r2};
  gsl_function f;
  f.params = &p;
  f.function = [](double g, void* v) {
    const auto* q = static_cast<P*>(v);
    const double c = std::cos(g);
    return (*q->s)(q->r1, q->r2, c) * specfun::legendre_all(q->l, c)[q->l] * std::sin(g);
  };
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  double result = 0.0, err = 0.0;
  gsl_integration_qags(&f, 0.0, kPi, 1e-14, 1e-12, 2000, ws, &result, &err);
  gsl_integration_workspace_free(ws);
  return 0.5 * (2 * l + 1) * result;
}

SchmidtOptions coarse(int l_max = 8) {
  SchmidtOptions o;
  o.dr = 0.05;
  o.r_max = 3.0;
  o.l_max = l_max;
  return o;
}

ChannelDecomposition channel_from(std::vector<double> lambdas, int l) {
  ChannelDecomposition c;
  c.l = l;
  c.dr = 0.1;
  c.lambdas = lambdas;
  for (double x : lambdas) c.sigmas.push_back(std::sqrt(x));
  return c;
}

struct GslQuiet {
  GslQuiet() { previous = gsl_set_error_handler_off(); }
  ~GslQuiet() { gsl_set_error_handler(previous); }
  gsl_error_handler_t* previous;
};
}  // namespace

TEST_CASE("RadialGrid") {
  const RadialGrid g;
  CHECK(g.size() == 350);
  CHECK(g.point(0) == Approx(0.005));
  CHECK(g.point(349) == Approx(3.495));
  CHECK(g.refined().size() == 700);
  CHECK(g.points().size() == 350u);
  CHECK_THROWS_AS(RadialGrid(0.0, 3.5), DomainError);
  CHECK_THROWS_AS(RadialGrid(0.03, 1.0), DomainError);
  CHECK_THROWS_AS(RadialGrid(0.1, 0.05), DomainError);
}

TEST_CASE("rank-one kernel") {
  const int n = 40;
  const double dr = 0.05;
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) f(i) = std::exp(-((i + 0.5) * dr - 1.0) * ((i + 0.5) * dr - 1.0));
  const double s = f.squaredNorm() * dr;
  const auto c = decompose_kernel(f * f.transpose(), dr, 0);
  REQUIRE(c.lambdas.size() == 1u);
  CHECK(c.lambdas[0] == Approx(s * s).epsilon(1e-12));
  CHECK(c.sigmas[0] == Approx(s).epsilon(1e-12));
  const Eigen::VectorXd u = c.modes.col(0);
  CHECK(u.squaredNorm() * dr == Approx(1.0).epsilon(1e-12));
  CHECK((u - f / std::sqrt(s)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("two-by-two toy kernel") {
  Eigen::MatrixXd k(2, 2);
  k << 0.6, 0.3, 0.3, 0.4;
  const auto c = decompose_kernel(k, 1.0, 0);
  REQUIRE(c.lambdas.size() == 2u);
  CHECK(c.sigmas[0] == Approx(0.5 + std::sqrt(0.1)).epsilon(1e-14));
  CHECK(c.sigmas[1] == Approx(0.5 - std::sqrt(0.1)).epsilon(1e-14));
  CHECK(c.lambdas[0] == Approx(0.8162277660168379 * 0.8162277660168379).epsilon(1e-13));
  CHECK(c.lambdas[1] == Approx(0.1837722339831621 * 0.1837722339831621).epsilon(1e-13));
  // first significant sample positive
  CHECK(c.modes(0, 0) > 0.0);
  CHECK(c.modes(0, 1) > 0.0);
}

TEST_CASE("negative eigenvalues keep their sign in sigma") {
  Eigen::MatrixXd k(2, 2);
  k << 0.0, 1.0, 1.0, 0.0;
  const auto c = decompose_kernel(k, 1.0, 2);
  REQUIRE(c.lambdas.size() == 2u);
  CHECK(c.lambdas[0] == Approx(1.0));
  CHECK(c.lambdas[1] == Approx(1.0));
  CHECK(std::min(c.sigmas[0], c.sigmas[1]) == Approx(-1.0));
  CHECK_THROWS_AS(decompose_kernel(Eigen::MatrixXd::Zero(2, 3), 1.0, 0), DomainError);
}

TEST_CASE("assemble_spectrum weights") {
  std::vector<ChannelDecomposition> chans{channel_from({0.004, 0.001}, 0),
                                          channel_from({0.0005}, 2)};
  const auto s = assemble_spectrum(chans);
  REQUIRE(s.entries.size() == 3u);
  const double c = 16.0 * kPi * kPi;
  const auto* e10 = s.find(1, 0);
  const auto* e12 = s.find(1, 2);
  REQUIRE(e10);
  REQUIRE(e12);
  CHECK(s.find(2, 2) == nullptr);
  CHECK(e10->channel_prob == Approx(c * 0.004));
  CHECK(e12->channel_prob == Approx(c * 0.0005 / 5.0));
  CHECK(e12->big_lambda == Approx(c * 0.0005 / std::pow(5.0, 1.5)));
  CHECK(e12->per_m_probability() * 5.0 == Approx(e12->channel_prob));

  double sum_sq = 0.0, sum_p = 0.0, entropy = 0.0;
  for (const auto& e : s.entries) {
    sum_sq += e.big_lambda * e.big_lambda;
    sum_p += e.channel_prob;
    const double q = e.per_m_probability();
    entropy -= (2 * e.l + 1) * q * std::log(q);
  }
  CHECK(s.K == Approx(1.0 / sum_sq));
  CHECK(schmidt_number(s) == Approx(s.K));
  CHECK(s.S == Approx(entropy));
  CHECK(s.completeness_defect == Approx(1.0 - sum_p));
  CHECK(s.l_max == 2);

  const auto ranked = s.ranked();
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    CHECK(ranked[i - 1].channel_prob >= ranked[i].channel_prob);
  }
  CHECK_THROWS_AS(assemble_spectrum({}), DomainError);
}

TEST_CASE("schmidt_number of plain probability lists") {
  for (int d : {1, 2, 7, 50}) {
    std::vector<double> p(d, 1.0 / d);
    CHECK(schmidt_number(p) == Approx(static_cast<double>(d)).epsilon(1e-13));
  }
  // K equals the Schmidt number of the per-m spectrum with its multiplicity
  std::vector<ChannelDecomposition> chans{channel_from({0.003}, 0), channel_from({0.001}, 1)};
  const auto s = assemble_spectrum(chans);
  std::vector<double> flat;
  for (const auto& e : s.entries) {
    for (int m = 0; m < 2 * e.l + 1; ++m) flat.push_back(e.per_m_probability());
  }
  CHECK(schmidt_number(flat) == Approx(s.K).epsilon(1e-13));
}

TEST_CASE("non-interacting product state has K = 1") {
  const auto st = TwoBodyState::trap(noninteracting_state());
  const auto d = decompose_state(st, coarse(4));
  CHECK(d.spectrum.K == Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(d.spectrum.S) < 1e-5);
  CHECK(std::abs(d.spectrum.completeness_defect) < 1e-6);
  CHECK(d.spectrum.completeness_ok);
  const auto top = d.spectrum.ranked().front();
  CHECK(top.n == 1);
  CHECK(top.l == 0);
}

TEST_CASE("projection spot values against adaptive angular quadrature") {
  GslQuiet quiet;
  const RadialGrid grid;
  const auto u0 = TwoBodyState::unitarity(0);
  const auto weak = TwoBodyState::trap(energy_of_inv_a(-2.0, 0));
  for (int l : {0, 1, 3, 12}) {
    const auto a0 = project_legendre(u0, l, grid);
    const auto aw = project_legendre(weak, l, grid);
    CAPTURE(l);
    // grid index 100 is r = 1.005
    CHECK(a0(100, 100) == Approx(alpha_gsl(u0, l, 1.005, 1.005)).epsilon(1e-8));
    const double off0 = alpha_gsl(u0, l, 0.405, 1.305);
    CHECK(std::abs(a0(40, 130) - off0) <= 1e-8 * std::abs(off0) + 1e-13);
    CHECK(aw(100, 100) == Approx(alpha_gsl(weak, l, 1.005, 1.005)).epsilon(1e-8));
    const double offw = alpha_gsl(weak, l, 0.075, 0.605);
    CHECK(std::abs(aw(7, 60) - offw) <= 1e-8 * std::abs(offw) + 1e-13);
  }
}

TEST_CASE("projection is symmetric and range projection matches") {
  const RadialGrid grid(0.05, 3.0);
  const auto st = TwoBodyState::trap(energy_of_inv_a(0.5, 1));
  const auto range = project_legendre_range(st, 2, 5, grid, 2);
  REQUIRE(range.size() == 4u);
  for (int l = 2; l <= 5; ++l) {
    const auto single = project_legendre(st, l, grid);
    CHECK((single - single.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((single - range[l - 2]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(project_legendre_range(st, 3, 2, grid), DomainError);
}

TEST_CASE("modes reconstruct the kernel and are orthonormal") {
  const RadialGrid grid(0.05, 3.0);
  const auto st = TwoBodyState::unitarity(1);
  for (int l : {0, 3}) {
    const auto c = decompose_channel(project_legendre(st, l, grid), grid, l, true, 0.0);
    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(grid.size(), grid.size());
    for (std::size_t n = 0; n < c.sigmas.size(); ++n) {
      rebuilt += c.sigmas[n] * c.modes.col(n) * c.modes.col(n).transpose();
    }
    CHECK((rebuilt - c.kernel).cwiseAbs().maxCoeff() < 1e-10 * c.kernel.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd gram = c.modes.transpose() * c.modes * grid.dr();
    CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <
          1e-10);
    for (std::size_t n = 1; n < c.lambdas.size(); ++n) CHECK(c.lambdas[n - 1] >= c.lambdas[n]);
  }
}

TEST_CASE("mode densities") {
  const auto d = decompose_state(TwoBodyState::unitarity(0), coarse(3));
  const auto& ch = d.channels[1];
  const auto rho = mode_density(ch, 1);
  double sum = 0.0;
  for (double v : rho) {
    CHECK(v >= 0.0);
    sum += v * ch.dr;
  }
  CHECK(sum == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(mode_density(ch, 0), DomainError);
  CHECK_THROWS_AS(mode_density(ch, 10000), DomainError);

  auto no_modes = coarse(1);
  no_modes.compute_modes = false;
  const auto bare = decompose_state(TwoBodyState::unitarity(0), no_modes);
  CHECK_THROWS_AS(mode_density(bare.channels[0], 1), DomainError);
}

TEST_CASE("parallel and serial runs agree exactly") {
  auto serial = coarse(6);
  serial.compute_modes = false;
  auto parallel = serial;
  parallel.jobs = 3;
  const auto st = TwoBodyState::trap(energy_of_inv_a(1.0, 0));
  const auto a = decompose_state(st, serial).spectrum;
  const auto b = decompose_state(st, parallel).spectrum;
  CHECK(a.K == b.K);
  CHECK(a.S == b.S);
}

TEST_CASE("converge raises l_max until K settles") {
  ConvergenceTolerances tol;
  tol.tol_k = 1e-3;
  tol.l_step = 4;
  tol.l_cap = 40;
  const auto res = converge(TwoBodyState::unitarity(1), RadialGrid(0.05, 3.0), 4, tol);
  const auto& trace = res.report.trace;
  REQUIRE(trace.size() >= 2u);
  // Adding channels only adds weight, so K can only fall.
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].dr != trace[i - 1].dr) continue;
    CHECK(trace[i].l_max > trace[i - 1].l_max);
    CHECK(trace[i].K <= trace[i - 1].K * (1.0 + 1e-12));
  }
  CHECK(res.report.grid_checked);
  CHECK(res.report.grid_converged);
  CHECK(res.report.grid_relative_change < 1e-2);
  CHECK(res.decomposition.spectrum.K == Approx(3.44).epsilon(0.02));
}

TEST_CASE("converge reports the trace when the cap is hit") {
  ConvergenceTolerances tol;
  tol.tol_k = 1e-12;
  tol.l_step = 2;
  tol.l_cap = 6;
  tol.check_grid = false;
  try {
    converge(TwoBodyState::unitarity(0), RadialGrid(0.1, 3.0), 2, tol);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.trace().size() >= 2u);
    CHECK(std::string(e.what()).find("cap") != std::string::npos);
  }
  tol.tol_k = -1.0;
  CHECK_THROWS_AS(converge(TwoBodyState::unitarity(0), RadialGrid(0.1, 3.0), 2, tol),
                  DomainError);
}

TEST_CASE("pipeline agrees with the brute-force reduced density") {
  const auto st = TwoBodyState::trap(energy_of_inv_a(-2.0, 0));
  const auto brute = oracle::reduced_density_schmidt(st, 0.1, 2.5, 16, 8, 64);
  SchmidtOptions o;
  o.dr = 0.1;
  o.r_max = 2.5;
  o.l_max = 8;
  o.compute_modes = false;
  const auto pipe = decompose_state(st, o).spectrum;
  CHECK(brute.trace == Approx(1.0).epsilon(0.05));
  CHECK(std::abs(brute.K - pipe.K) / pipe.K < 0.05);
}
