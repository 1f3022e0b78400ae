#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <ratio>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "polygas/polygas.hpp"

using namespace polygas;

namespace {

/** @brief Collects the failed sub-checks of one criterion. */
struct Check {
  std::vector<std::string> failures;
  std::ostringstream info;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

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

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

void combinatorics(Check& c) {
  auto t0 = Clock::now();
  long graphs = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::pair<int, int>> all;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
    for (std::uint32_t m = 0; m < (1u << all.size()); ++m) {
      LabeledGraph g;
      g.n = n;
      for (std::size_t k = 0; k < all.size(); ++k)
        if (m >> k & 1u) g.edges.push_back(all[k]);
      double ref = oracle::log_gas_coefficient(g);
      if (static_cast<double>(ursell(g)) != std::round(ref) || std::abs(ref - std::round(ref)) > 1e-9) {
        c.expect(false, "ursell mismatch at n=" + std::to_string(n) + " mask " + std::to_string(m));
        return;
      }
      ++graphs;
    }
  }
  auto r2 = dtree_factorial_sum(2), r3 = dtree_factorial_sum(3);
  c.expect(r2.lhs == 2 && r2.rhs == 16, "d-tree sum n=2");
  c.expect(r3.lhs == 24 && r3.rhs == 256, "d-tree sum n=3");
  for (int n = 2; n <= 7; ++n) {
    c.expect(dtree_factorial_sum(n).holds, "d-tree bound n=" + std::to_string(n));
    c.expect(cayley_total(n) == oracle::brute_force_tree_count(n) && cayley_total(n) == ipow(n, n - 2),
             "cayley total n=" + std::to_string(n));
  }
  double t = seconds_since(t0);
  c.expect(t < 60.0, "runtime " + num(t) + " s");
  c.info << graphs << " graphs, " << num(t) << " s";
}

void kernels(Check& c) {
  auto t0 = Clock::now();
  double worst_row = 0.0, worst_dual = 0.0, worst_ca = 0.0;
  for (auto s : {spec(3, 2, 1, 4), spec(3, 3, 1, 2)}) {
    LatticeHierarchy h(s);
    auto A = background_kernel(h);
    Eigen::MatrixXd M = A.dense();
    worst_row = std::max(worst_row, (M.rowwise().sum().array() - 1.0).abs().maxCoeff());
    for (Eigen::Index y = 0; y < M.cols(); ++y) {
      Field col{Level::Fine, std::vector<double>(M.col(y).data(), M.col(y).data() + M.rows())};
      auto m = block_mean(col, h);
      for (std::size_t x = 0; x < m.values.size(); ++x)
        worst_dual = std::max(worst_dual, std::abs(m.values[x] - (static_cast<Eigen::Index>(x) == y ? 1.0 : 0.0)));
    }
    // averaging matrix built from centred blocks of side L^n
    const Torus& F = h.fine();
    const int half = (static_cast<int>(ipow(s.L, s.n)) - 1) / 2;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(M.cols(), M.rows());
    for (Eigen::Index x = 0; x < C.rows(); ++x) {
      const std::size_t e = h.embed(static_cast<std::size_t>(x));
      for (std::size_t xi = 0; xi < F.volume(); ++xi) {
        bool inside = true;
        for (int a = 0; a < F.dim(); ++a)
          if (F.axis_distance(F.coord(xi, a), F.coord(e, a)) > half) inside = false;
        if (inside) C(x, static_cast<Eigen::Index>(xi)) = 1.0;
      }
      C.row(x) /= C.row(x).sum();
    }
    Eigen::MatrixXd CA = C * M;
    worst_ca = std::max(worst_ca, (CA - Eigen::MatrixXd::Identity(CA.rows(), CA.cols())).cwiseAbs().maxCoeff());
  }
  double t = seconds_since(t0);
  c.expect(worst_row <= 1e-12, "row sums " + num(worst_row));
  c.expect(worst_dual <= 1e-12, "block averages " + num(worst_dual));
  c.expect(worst_ca <= 1e-12, "C A - I " + num(worst_ca));
  c.expect(t < 120.0, "runtime " + num(t) + " s");
  c.info << "row " << num(worst_row) << ", dual " << num(worst_dual) << ", CA " << num(worst_ca) << ", " << num(t)
         << " s";
}

void covariance(Check& c) {
  double worst_sq = 0.0;
  for (auto s : {spec(3, 2, 1, 2), spec(3, 3, 1, 2), spec(3, 2, 1, 4)}) {
    LatticeHierarchy h(s);
    auto A = background_kernel(h);
    MultiplierModel m;
    m.irrelevant_amplitude = 0.1;
    auto cov = gamma(m, A, 0.3, 0.9);
    c.expect(h.block().volume() <= 4096, "dense check size");
    // independent dense product against the dense inverse of G^{-1}
    Eigen::MatrixXd G = cov.Gamma.dense(), Ginv = cov.g_inv.dense();
    Eigen::MatrixXd R = G * G * Ginv - Eigen::MatrixXd::Identity(G.rows(), G.cols());
    worst_sq = std::max(worst_sq, R.operatorNorm());
  }
  c.expect(worst_sq <= 1e-10, "Gamma^2 G^-1 - I " + num(worst_sq));

  LatticeHierarchy h(spec(3, 3, 1, 2, 1, 3));
  auto A = background_kernel(h);
  auto cov = gamma(MultiplierModel{}, A, 0.3, 0.9);
  auto r = hs_norm(cov, {0}, {1});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N01;
  int strict = 0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> phi(h.block().volume(), 0.0);
    for (auto x : h.coarse_sites(1)) phi[x] = N01(rng);
    double q = agamma_quadratic_form(cov, phi, {0});
    if (q < r.value * blockspin_norm2(h, phi, {1})) ++strict;
  }
  c.expect(strict == 20, "Schur strict on " + std::to_string(strict) + "/20");

  int scanned = 0;
  double worst_ratio = 0.0;
  for (double gp2 : {1e-10, 1e-11, 1e-12, 1e-13, 1e-14}) {
    if (condhs_margin(gp2, 9.0) < 10.0) continue;
    const double g = 1e-3, pb = std::sqrt(gp2 / g);
    auto cv = gamma(MultiplierModel{}, A, g, pb);
    auto hs = hs_norm(cv, {0}, {0}, 0.25);
    worst_ratio = std::max(worst_ratio, hs.value * 3 * gp2);
    ++scanned;
  }
  c.expect(scanned == 5, "scan points with margin >= 10: " + std::to_string(scanned));
  c.expect(worst_ratio <= 1.25, "HS / (3 g phibar^2)^-1 = " + num(worst_ratio));

  LatticeHierarchy h0(spec(3, 3, 0, 2));
  auto A0 = background_kernel(h0);
  const double m2 = std::exp(-6.2);
  auto small = gamma(MultiplierModel{}, A0, 1.0, std::sqrt(m2 / 3.0));
  auto ms = multiscale_decompose(small.Gamma, m2);
  // slices summed in position space against the kernel column Gamma(x, 0)
  std::vector<double> sum(ms.slices.front().size(), 0.0);
  for (const auto& sl : ms.slices)
    for (std::size_t x = 0; x < sum.size(); ++x) sum[x] += sl[x];
  double rec = 0.0;
  for (std::size_t x = 0; x < sum.size(); ++x) rec = std::max(rec, std::abs(sum[x] - small.Gamma(x, 0)));
  c.expect(rec <= 1e-8 && ms.reconstruction_error <= 1e-8, "multiscale " + num(rec));
  c.info << "GG " << num(worst_sq) << ", HS ratio " << num(worst_ratio) << ", multiscale " << num(rec) << " (J "
         << ms.J << ")";
}

void expansion(Check& c) {
  auto t0 = Clock::now();
  auto two = cluster_identity_check(named_cluster_instance("twoblock"));
  c.expect(two.rel_error <= 1e-6, "twoblock rel " + num(two.rel_error));
  auto three = cluster_identity_check(named_cluster_instance("threeblock"));
  c.expect(three.z_score <= 3.0, "threeblock z " + num(three.z_score));

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  long instances = 0;
  for (int units = 1; units <= 6; ++units) {
    // every assignment of units to coarse blocks, as restricted growth strings
    std::vector<int> rg(units, 0);
    std::function<void(int, int)> rec = [&](int k, int blocks) {
      if (k == units) {
        std::map<Mask, double> fine;
        for (Mask Y = 1; Y <= full_mask(units); ++Y)
          if (std::popcount(Y) == 1 || U(rng) > 0.3) fine[Y] = std::popcount(Y) == 1 ? 1 + 0.2 * U(rng) : 0.3 * U(rng);
        auto g = reblock(fine, rg, blocks);
        std::map<std::uint32_t, double> fa(fine.begin(), fine.end()), ga(g.begin(), g.end());
        double zf = oracle::partition_sum(full_mask(units), fa), zc = oracle::partition_sum(full_mask(blocks), ga);
        worst = std::max(worst, std::abs(zc - zf) / std::max(1.0, std::abs(zf)));
        ++instances;
        return;
      }
      for (int b = 0; b <= blocks; ++b) {
        rg[k] = b;
        rec(k + 1, std::max(blocks, b + 1));
      }
    };
    rg[0] = 0;
    rec(1, 1);
  }
  c.expect(worst <= 1e-12, "reblock conservation " + num(worst));

  ScalarPolymerGas gas;
  gas.sites = 2;
  gas.set(1, 1.0);
  gas.set(2, 1.0);
  gas.set(3, 0.1);
  auto m = mayer_log(gas, 8);
  const double err = std::abs(m.log_z - std::log(1.1));
  c.expect(err <= m.tail_bound, "Mayer error " + num(err) + " above tail " + num(m.tail_bound));
  c.expect(m.tail_bound < 1e-6, "Mayer tail " + num(m.tail_bound));
  double t = seconds_since(t0);
  c.expect(t < 600.0, "runtime " + num(t) + " s");
  c.info << "twoblock " << num(two.rel_error) << ", threeblock z " << num(three.z_score) << ", reblock " << num(worst)
         << " on " << instances << ", Mayer " << num(err) << " <= " << num(m.tail_bound) << ", " << num(t) << " s";
}

void stability(Check& c) {
  double worst_witness = 0.0, worst_grid = 0.0;
  for (double g : {0.05, 0.2, 1.0})
    for (double pb : {0.5, 1.0, 3.0}) {
      auto s = stability_infimum(0.0, 0.0, g, pb, 0.0);
      c.expect(s.pass, "stability_infimum fails at g=" + num(g) + " pb=" + num(pb));
      const double scale = g * std::pow(pb, 4);
      const double x = -2 * pb;
      worst_witness = std::max(worst_witness, std::abs(v_eps(x, 0.0, g, pb) + g * pb * pb * x * x) / scale);
      for (int k = 0; k <= 200000; ++k) {
        double y = -10 * pb + 20 * pb * k / 200000.0;
        double lhs = v_eps(y, 0.0, g, pb) + g * pb * pb * y * y;
        worst_grid = std::min(worst_grid, lhs / scale);
      }
    }
  c.expect(worst_witness < 1e-10, "witness residual " + num(worst_witness));
  c.expect(worst_grid >= -1e-12, "grid violation " + num(worst_grid));
  c.info << "witness " << num(worst_witness) << ", grid min " << num(worst_grid);
}

void predictor(Check& c) {
  // g n ln L -> 16 pi^2 / 9 and 3 n ln L -> ln(1/h) give m^3 / (h ln(1/h)) = (9/16) / 3 / pi^2
  using slope = std::ratio<9, 16>;
  using coefficient = std::ratio_divide<slope, std::ratio<3>>;
  c.expect(std::ratio_equal_v<coefficient, std::ratio<3, 16>>, "rational coefficient");
  const double pi2 = M_PI * M_PI;
  c.expect(std::abs(kFlowSlope - double(slope::num) / slope::den / pi2) <= 1e-16, "flow slope");
  c.expect(std::abs(kMagnetizationCoefficient - double(coefficient::num) / coefficient::den / pi2) <= 1e-16,
           "magnetization coefficient");

  using big = boost::multiprecision::cpp_bin_float_50;
  big h("1e-6");
  big pi = boost::math::constants::pi<big>();
  double ref = boost::multiprecision::cbrt(3 * h * boost::multiprecision::log(1 / h) / (16 * pi * pi)).convert_to<double>();
  double m = predict_magnetization(1e-6, PredictMode::Asymptotic);
  c.expect(std::abs(m - ref) <= 1e-14 * ref, "asymptotic vs multiprecision");
  c.expect(std::abs(m / 6.40e-3 - 1.0) <= 0.005, "m(1e-6) = " + num(m));

  std::vector<double> medians;
  double lo = 1e300, hi = 0;
  for (int k = 4; k < 12; ++k) {
    std::vector<double> r;
    for (int j = 0; j <= 10; ++j) {
      double hh = std::pow(10.0, -k - j / 10.0);
      double v = predict_magnetization(hh, PredictMode::Refined) / predict_magnetization(hh, PredictMode::Asymptotic);
      r.push_back(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    std::nth_element(r.begin(), r.begin() + 5, r.end());
    medians.push_back(r[5]);
  }
  c.expect(lo >= 0.5 && hi <= 2.0, "ratio range [" + num(lo) + ", " + num(hi) + "]");
  for (std::size_t k = 1; k < medians.size(); ++k)
    c.expect(std::abs(medians[k] - 1) < std::abs(medians[k - 1] - 1), "decade median trend at 1e-" + std::to_string(k + 4));
  c.info << "m(1e-6) " << num(m) << ", ratio in [" << num(lo) << ", " << num(hi) << "], medians " << num(medians.front())
         << " -> " << num(medians.back());
}

ScaleChoice hand_scale(double ell, double Lcal, double r) {
  ScaleChoice s;
  s.h = 1e-8;
  s.L = 2;
  s.n = 3;
  s.ell = ell;
  s.Lcal = Lcal;
  s.g = 1e-3;
  s.phibar = 1.0;
  s.r_frak = r;
  s.eps_hat = 1e-9;
  s.eta = 0.1;
  s.delta = 0.2;
  fill_ledger(s, ScaleOptions{});
  return s;
}

void pipeline(Check& c) {
  CertificateOptions o;
  o.eta = 0.25;
  o.margin_min = 10;
  auto cert = error_certificate(1e-8, 0.2, 2, 1e-3, o);
  if (cert.refused)
    c.expect(!cert.binding_stage.empty() && !cert.binding_condition.empty(), "refusal without a named condition");
  else
    c.expect(cert.relative_bound <= 0.2, "emitted bound " + num(cert.relative_bound));

  auto convce = certify_scale(hand_scale(25, 100, 1e-4));
  c.expect(convce.refused && convce.binding_stage == "input_norms" && convce.binding_condition == "condconvce",
           "convergence violation refused at " + convce.binding_stage + "/" + convce.binding_condition);
  auto room = certify_scale(hand_scale(100, 100, 0.01));
  c.expect(room.refused && room.binding_stage == "reblock" && room.binding_condition == "reblock_precondition",
           "reblock violation refused at " + room.binding_stage + "/" + room.binding_condition);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto bump = [&](double x) { return x * (1.0 + 0.5 * U(rng)) + 1e-6; };
  int compared = 0, violations = 0;
  auto cmp = [&](auto f, auto g) {
    double a, b;
    try {
      a = f();
      b = g();
    } catch (const Error&) {
      return;
    }
    if (b < a) ++violations;
    ++compared;
  };
  for (int t = 0; t < 200; ++t) {
    const double ratio4 = 16.0, Ncal = 1.0 + 3 * U(rng);
    double ng = 0.005 * U(rng), nd = 1.0 + 0.001 * U(rng);
    cmp([&] { return reblock_bounds(ng, nd, ratio4, Ncal).norm_sfg; },
        [&] { return reblock_bounds(bump(ng), nd, ratio4, Ncal).norm_sfg; });
    cmp([&] { return reblock_bounds(ng, nd, ratio4, Ncal).norm_sfg_square; },
        [&] { return reblock_bounds(ng, nd * (1.0 + 0.002 * U(rng)), ratio4, Ncal).norm_sfg_square; });
    double sfg = 0.3 * U(rng), sq = 0.5 * U(rng), an = 0.5 + U(rng), gn = 0.5 * U(rng), r = 1.0 + U(rng);
    auto loc = [&](double a1, double a2, double a3, double a4) { return localization_bound(a1, a2, a3, a4, r, 1.0).norm_A; };
    cmp([&] { return loc(sfg, sq, an, gn); }, [&] { return loc(bump(sfg), sq, an, gn); });
    cmp([&] { return loc(sfg, sq, an, gn); }, [&] { return loc(sfg, bump(sq), an, gn); });
    cmp([&] { return loc(sfg, sq, an, gn); }, [&] { return loc(sfg, sq, bump(an), gn); });
    cmp([&] { return loc(sfg, sq, an, gn); }, [&] { return loc(sfg, sq, an, bump(gn)); });
    double nA = U(rng);
    cmp([&] { return integration_bound(nA, 0.1, 16); }, [&] { return integration_bound(bump(nA), 0.1, 16); });
    double nsA = 0.4 * U(rng), ms = 0.6 + U(rng);
    cmp([&] { return mayer_bound(nsA, ms).tail; }, [&] { return mayer_bound(bump(nsA), ms).tail; });
    double gt = 0.04 * U(rng);
    cmp([&] { return single_point_bound(gt, ratio4, 0.1); }, [&] { return single_point_bound(bump(gt), ratio4, 0.1); });
  }
  c.expect(violations == 0, std::to_string(violations) + " monotonicity violations");
  c.expect(compared > 1600, "only " + std::to_string(compared) + " comparisons");
  c.info << (cert.refused ? "refused at " + cert.binding_stage + "/" + cert.binding_condition
                          : "emitted " + num(cert.relative_bound))
         << ", " << compared << " monotone comparisons";
}

MCConfig chain(int side, int d, double g0, double nu, double h, bool coupled) {
  MCConfig c;
  c.side = side;
  c.d = d;
  c.g0 = g0;
  c.nu = nu;
  c.h = h;
  c.sweeps = 4000;
  c.burn_in = 500;
  c.laplacian = coupled;
  c.zero_mode = coupled;
  return c;
}

void simulator(Check& c) {
  double worst_z = 0.0;
  for (auto [g0, nu, h] : {std::tuple{0.1, 0.5, 0.2}, std::tuple{1.0, 0.0, 0.5}, std::tuple{0.5, -0.2, 0.1}}) {
    auto m = run_chain(chain(16, 2, g0, nu, h, false));
    double z = std::abs(m.magnetization - oracle::window_mean(g0, nu, h)) / m.std_error;
    worst_z = std::max(worst_z, z);
    c.expect(z < 3.0, "decoupled z " + num(z));
  }
  auto t0 = Clock::now();
  auto sym = run_chain(chain(16, 2, 0.1, 0.5, 0.0, true));
  double t2 = seconds_since(t0);
  double zs = std::abs(sym.magnetization) / sym.std_error;
  c.expect(zs < 3.0, "symmetric phase 16^2 z " + num(zs));
  auto again = run_chain(chain(16, 2, 0.1, 0.5, 0.0, true));
  c.expect(again.magnetization_series.size() == sym.magnetization_series.size() &&
               std::memcmp(again.magnetization_series.data(), sym.magnetization_series.data(),
                           sym.magnetization_series.size() * sizeof(double)) == 0,
           "seeded chains differ");
  t0 = Clock::now();
  auto sym4 = run_chain(chain(8, 4, 0.1, 0.5, 0.0, true));
  double t4 = seconds_since(t0);
  double z4 = std::abs(sym4.magnetization) / sym4.std_error;
  c.expect(z4 < 3.0, "symmetric phase 8^4 z " + num(z4));
  c.expect(t2 < 300.0, "16^2 runtime " + num(t2) + " s");
  c.expect(t4 < 900.0, "8^4 runtime " + num(t4) + " s");
  c.info << "decoupled max z " << num(worst_z) << ", h=0 z " << num(zs) << " / " << num(z4) << ", " << num(t2)
         << " s at 16^2, " << num(t4) << " s at 8^4";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
      {"combinatorial exactness", combinatorics}, {"kernel identities", kernels},
      {"covariance", covariance},                 {"expansion identities", expansion},
      {"stability sharpness", stability},         {"predictor", predictor},
      {"pipeline behaviour", pipeline},           {"simulator oracles", simulator}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Check c;
    try {
      criteria[k].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s criterion %zu (%s): %s\n", ok ? "PASS" : "FAIL", k + 1, criteria[k].first, c.info.str().c_str());
    for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
