#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <random>

#include "polygas/covariance.hpp"

using namespace polygas;

namespace {

TorusSpec spec(int L, int N, int n, int d, int ell = 1, int Lcal = 1) {
  TorusSpec s;
  s.L = L;
  s.N = N;
  s.n = n;
  s.d = d;
  s.ell = ell;
  s.Lcal = Lcal;
  return s;
}

}  // namespace

TEST(GbarInverse, PureQuadratic) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  MultiplierModel m;
  m.nu = 0.3;
  auto K = gbar_inverse(m, h);
  const auto& T = h.block();
  for (std::size_t p = 0; p < T.volume(); ++p) EXPECT_DOUBLE_EQ(K.multiplier[p], T.phat2(p) + 0.3);
  m.nu = 0.0;
  EXPECT_EQ(gbar_inverse(m, h).multiplier[0], 0.0);
  EXPECT_LT(K.stencil_mismatch(), 1e-12);
}

TEST(GbarInverse, CubicBumpWithinBound) {
  LatticeHierarchy h(spec(3, 3, 1, 2));
  MultiplierModel m;
  m.irrelevant_amplitude = 0.2;
  m.C_mu = 1.0;
  auto K = gbar_inverse(m, h);
  const auto& T = h.block();
  double worst = 0.0;
  for (std::size_t p = 1; p < T.volume(); ++p) {
    double pn = T.momentum_norm(p);
    worst = std::max(worst, std::abs(K.multiplier[p] - T.phat2(p)) / (pn * pn * pn));
  }
  EXPECT_LE(worst, m.C_mu);
  m.irrelevant_amplitude = -50.0;
  EXPECT_THROW(gbar_inverse(m, h), DomainError);
}

TEST(Gamma, IdentityKernelClosedForm) {
  LatticeHierarchy h(spec(3, 2, 0, 2));
  auto A = background_kernel(h);
  MultiplierModel m;
  const double g = 0.2, pb = 1.3;
  auto c = gamma(m, A, g, pb);
  const auto& T = h.block();
  for (std::size_t p = 0; p < T.volume(); ++p)
    EXPECT_NEAR(c.Gamma.multiplier[p], 1.0 / std::sqrt(T.phat2(p) + 3 * g * pb * pb), 1e-13);
}

TEST(Gamma, ZeroMomentumValue) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  MultiplierModel m;
  m.nu = 0.05;
  auto c = gamma(m, A, 0.1, 2.0);
  EXPECT_NEAR(c.Gamma.multiplier[0] * c.Gamma.multiplier[0], 1.0 / (0.05 + c.mass2()), 1e-12);
}

TEST(Gamma, SquareIsCovariance) {
  for (auto s : {spec(3, 2, 1, 2), spec(3, 3, 1, 2), spec(3, 2, 1, 4)}) {
    LatticeHierarchy h(s);
    auto A = background_kernel(h);
    MultiplierModel m;
    m.irrelevant_amplitude = 0.1;
    auto c = gamma(m, A, 0.3, 0.9);
    EXPECT_LT(gamma_square_residual(c), 1e-10);
  }
}

TEST(Gamma, MultiplierIdentityAndSymmetry) {
  LatticeHierarchy h(spec(3, 3, 1, 2));
  auto A = background_kernel(h);
  auto c = gamma(MultiplierModel{}, A, 0.3, 0.9);
  const auto& T = h.block();
  for (std::size_t p = 0; p < T.volume(); ++p) {
    EXPECT_NEAR(c.Gamma.multiplier[p] * c.Gamma.multiplier[p] * c.g_inv.multiplier[p], 1.0, 1e-12);
    auto k = T.coords(p);
    for (auto& v : k) v = -v;
    EXPECT_NEAR(c.Gamma.multiplier[T.index(k)], c.Gamma.multiplier[p], 1e-14);
  }
  for (std::size_t x = 0; x < T.volume(); ++x) EXPECT_NEAR(c.Gamma(x, 0), c.Gamma(0, x), 1e-14);
}

TEST(Gamma, NegativeMassIsUnstable) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  MultiplierModel m;
  m.nu = -5.0;
  m.c_mu_prime = -10.0;
  EXPECT_THROW(gamma(m, A, 0.01, 1.0), StabilityError);
}

TEST(HsNorm, SchurDominatesRandomForms) {
  LatticeHierarchy h(spec(3, 3, 1, 2, 1, 3));
  auto A = background_kernel(h);
  auto c = gamma(MultiplierModel{}, A, 0.3, 0.9);
  std::vector<std::size_t> X{0}, Xp{1};
  auto r = hs_norm(c, X, Xp);
  EXPECT_GE(r.value * (1 + 1e-12), r.gram_top_eigenvalue);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N01;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> phi(h.block().volume(), 0.0);
    for (auto x : h.coarse_sites(Xp[0])) phi[x] = N01(rng);
    double q = agamma_quadratic_form(c, phi, X);
    EXPECT_LE(q, r.value * blockspin_norm2(h, phi, Xp) * (1 + 1e-12));
  }
}

TEST(HsNorm, SharpBoundUnderCondition) {
  // 5-point scan of g phibar^2 with condhs margin >= 10
  LatticeHierarchy h(spec(3, 3, 1, 2, 1, 3));
  auto A = background_kernel(h);
  const double B = 9.0;
  int checked = 0;
  for (double gp2 : {1e-10, 1e-11, 1e-12, 1e-13, 1e-14}) {
    ASSERT_GE(condhs_margin(gp2, B), 10.0);
    double g = 1e-3, pb = std::sqrt(gp2 / g);
    auto c = gamma(MultiplierModel{}, A, g, pb);
    auto r = hs_norm(c, {0}, {0}, 0.25);
    EXPECT_LE(r.value, 1.25 / (3 * gp2)) << gp2;
    ++checked;
  }
  EXPECT_EQ(checked, 5);
}

TEST(GammaBlockNorm, IdentityAndZero) {
  LatticeHierarchy h(spec(3, 3, 1, 2, 1, 3));
  const auto& T = h.block();
  auto Id = KernelOperator::from_multiplier(Level::Block, T.side(), T.dim(), std::vector<double>(T.volume(), 1.0));
  // double-dotted identity is the unit matrix, so the sup is over the weights B^{-1/2} and B^{3/2}
  EXPECT_NEAR(gamma_block_norm(h, Id, 1.0).value, std::pow(9.0, 1.5), 1e-10);
  auto Z = KernelOperator::from_multiplier(Level::Block, T.side(), T.dim(), std::vector<double>(T.volume(), 0.0));
  EXPECT_EQ(gamma_block_norm(h, Z, 1.0).value, 0.0);
}

TEST(ANorm, IdentityAndMonotone) {
  LatticeHierarchy h0(spec(3, 2, 0, 2));
  auto A0 = background_kernel(h0);
  EXPECT_NEAR(a_norm(A0, 1.0), 1.0, 1e-12);
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  double c = fit_decay_rate(A);
  double full = a_norm(A, c), half = a_norm(A, c / 2);
  EXPECT_LE(half, full);
  double plain = 0.0;
  for (std::size_t x = 0; x < h.block().volume(); ++x) plain += std::abs(A(h.block_sites(0)[0], x));
  EXPECT_LE(plain, a_norm(A, 0.0) * (1 + 1e-12));
  EXPECT_LE(a_norm(A, 0.0), half);
  EXPECT_THROW(a_norm(A, -1.0), DomainError);
}

TEST(Multiscale, SingleSliceAndReconstruction) {
  LatticeHierarchy h(spec(3, 3, 0, 2));
  auto A = background_kernel(h);
  auto big = gamma(MultiplierModel{}, A, 1.0, 1.0);
  auto r0 = multiscale_decompose(big.Gamma, big.mass2());
  EXPECT_EQ(r0.J, 0);
  EXPECT_LT(r0.reconstruction_error, 1e-12);
  const double m2 = std::exp(-6.2);
  auto small = gamma(MultiplierModel{}, A, 1.0, std::sqrt(m2 / 3.0));
  auto r = multiscale_decompose(small.Gamma, m2);
  EXPECT_EQ(r.J, 3);
  EXPECT_EQ(r.slices.size(), 4u);
  EXPECT_LT(r.reconstruction_error, 1e-8);
  EXPECT_THROW(multiscale_decompose(small.Gamma, 0.0), StabilityError);
}

TEST(GammaTilde, VanishesForPureQuadratic) {
  LatticeHierarchy h(spec(3, 3, 0, 2));
  auto A = background_kernel(h);
  auto c = gamma(MultiplierModel{}, A, 0.2, 1.0);
  EXPECT_LT(gamma_tilde_norm(c.Gamma, 1.0, c.mass2()), 1e-12);
}

TEST(GammaTilde, StableUnderMassHalving) {
  LatticeHierarchy h(spec(3, 3, 0, 2));
  auto A = background_kernel(h);
  MultiplierModel m;
  m.irrelevant_amplitude = 0.1;
  auto c1 = gamma(m, A, 0.1, 0.5);
  auto c2 = gamma(m, A, 0.05, 0.5);
  double a = gamma_tilde_norm(c1.Gamma, 1.0, c1.mass2()), b = gamma_tilde_norm(c2.Gamma, 1.0, c2.mass2());
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_LE(b / a, 2.0);
}

TEST(GammaSqrt, ResolventIntegralOneDimension) {
  LatticeHierarchy h(spec(3, 3, 0, 1));
  auto A = background_kernel(h);
  auto c = gamma(MultiplierModel{}, A, 0.2, 0.7);
  const auto& T = h.block();
  boost::math::quadrature::exp_sinh<double> q;
  for (std::size_t p = 0; p < T.volume(); ++p) {
    double mu = T.phat2(p) + c.mass2();
    // (1/pi) int_0^inf (mu + s)^{-1} s^{-1/2} ds with s = t^2
    double I = q.integrate([&](double t) { return 2.0 / (mu + t * t); }) / M_PI;
    EXPECT_NEAR(c.Gamma.multiplier[p], I, 1e-9);
  }
}
