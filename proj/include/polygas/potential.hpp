#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "polygas/core.hpp"

namespace polygas {

inline constexpr double kFlowSlope = 9.0 / (16.0 * M_PI * M_PI);
inline constexpr double kMagnetizationCoefficient = 3.0 / (16.0 * M_PI * M_PI);

/// W(x) = (nu/2) x^2 + (g/4) x^4 - hbar x.
inline double effective_potential(double x, double g, double nu, double hbar) {
  return 0.5 * nu * x * x + 0.25 * g * x * x * x * x - hbar * x;
}

/** @brief Global minimiser of the effective potential with its competitors. */
struct MinimizerReport {
  double phibar = 0.0;
  std::vector<double> critical_points;
  double residual = 0.0;
  bool unique = true;
};

/// Real roots of g x^3 + nu x - hbar, bracketed by the critical points of the cubic.
inline std::vector<double> cubic_real_roots(double g, double nu, double hbar) {
  auto f = [&](double x) { return g * x * x * x + nu * x - hbar; };
  auto fp = [&](double x) { return 3.0 * g * x * x + nu; };
  double R = 1.0 + std::max(std::abs(nu) / g, std::abs(hbar) / g);
  std::vector<double> edges{-R};
  if (nu < 0) {
    double c = std::sqrt(-nu / (3.0 * g));
    edges.push_back(-c);
    edges.push_back(c);
  }
  edges.push_back(R);
  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double a = edges[i], b = edges[i + 1];
    double fa = f(a), fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
      continue;
    }
    if ((fa < 0) == (fb < 0)) continue;
    for (int it = 0; it < 200 && b - a > 1e-300; ++it) {
      double m = 0.5 * (a + b);
      double fm = f(m);
      if ((fm < 0) == (fa < 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
      if (b - a <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(m))) break;
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 3; ++it) {
      double d = fp(x);
      if (d != 0.0) x -= f(x) / d;
    }
    roots.push_back(x);
  }
  return roots;
}

inline MinimizerReport minimize_potential(double g, double nu, double hbar) {
  if (!(g > 0)) throw DomainError("minimize_potential: g must be positive");
  if (hbar < 0) throw DomainError("minimize_potential: hbar must be nonnegative");
  MinimizerReport r;
  r.critical_points = cubic_real_roots(g, nu, hbar);
  double best = std::numeric_limits<double>::infinity();
  for (double x : r.critical_points) {
    double w = effective_potential(x, g, nu, hbar);
    if (w < best) {
      best = w;
      r.phibar = x;
    }
  }
  for (double x : r.critical_points)
    if (x != r.phibar && effective_potential(x, g, nu, hbar) <= best) r.unique = false;
  if (hbar > 0 && !r.unique) throw NumericError("minimize_potential: minimiser not unique for hbar > 0");
  double scale = std::max({std::abs(hbar), g * std::pow(std::abs(r.phibar), 3), std::abs(nu * r.phibar), 1e-300});
  r.residual = std::abs(g * r.phibar * r.phibar * r.phibar + nu * r.phibar - hbar) / scale;
  return r;
}

/// V_eps(x) = -eps x + g phibar x^3 + (g/4) x^4.
template <class T>
T v_eps(T x, T eps, double g, double phibar) {
  return -eps * x + g * phibar * x * x * x + 0.25 * g * x * x * x * x;
}

inline double v_eps(double x, double eps, double g, double phibar) { return v_eps<double>(x, eps, g, phibar); }

/** @brief Grid verification of the quadratic lower bound for Re V_eps(x + r). */
struct StabilityReport {
  double measured_infimum = 0.0;
  double certified_lower_bound = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_x = 0.0;
  double witness_residual = 0.0;
  bool tail_ok = false;
  bool pass = false;
  std::string failed_side;
};

/**
 * @brief inf over |eps| <= eps_hat, |r| <= 2 r_frak (complex) of Re V_eps(x + r).
 *
 * The minimum over the eps disc is -eps_hat |x + r|; the result is superharmonic in r,
 * so it is minimised on the circle |r| = 2 r_frak, sampled at `angles` points.
 */
inline double stability_pointwise(double x, double eps_hat, double r_frak, double g, double phibar,
                                  int angles = 256) {
  using C = std::complex<double>;
  auto val = [&](C y) {
    C p = g * phibar * y * y * y + 0.25 * g * y * y * y * y;
    return p.real() - eps_hat * std::abs(y);
  };
  if (r_frak == 0.0) return val(C(x, 0.0));
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < angles; ++a) {
    double t = 2.0 * M_PI * a / angles;
    best = std::min(best, val(C(x, 0.0) + 2.0 * r_frak * C(std::cos(t), std::sin(t))));
  }
  return best;
}

inline StabilityReport stability_infimum(double eps_hat, double r_frak, double g, double phibar, double eta,
                                         int grid = 4001, double margin_min = 1.0) {
  StabilityReport s;
  if (r_frak > 0 || eps_hat > 0) {
    if (!(margin_min * eps_hat * (1 + eta) <= g * phibar * phibar * r_frak || r_frak == 0))
      s.failed_side = "eps_hat << g phibar^2 r";
    if (!(margin_min * r_frak * (1 + eta) <= phibar)) s.failed_side = "r << phibar";
  }
  const double a = (1.0 + eta) * g * phibar * phibar;
  const double offset = 3.0 * (1.0 + eta) * r_frak * (eps_hat + 12.0 * g * phibar * r_frak * r_frak);
  const double scale = std::max(g * std::pow(phibar, 4), 1e-300);
  s.measured_infimum = std::numeric_limits<double>::infinity();
  s.certified_lower_bound = -offset;
  for (int i = 0; i < grid; ++i) {
    double x = phibar * (-10.0 + 20.0 * i / (grid - 1));
    double lhs = stability_pointwise(x, eps_hat, r_frak, g, phibar);
    double rhs = -a * x * x - offset;
    s.measured_infimum = std::min(s.measured_infimum, lhs);
    double m = (lhs - rhs) / scale;
    if (m < s.worst_margin) {
      s.worst_margin = m;
      s.worst_x = x;
    }
  }
  double xw = -2.0 * phibar;
  s.witness_residual =
      std::abs(stability_pointwise(xw, eps_hat, r_frak, g, phibar) - (-a * xw * xw - offset)) / scale;
  // Beyond |x| = 10 phibar: |Im y| <= |y|/4 gives Re y^4 >= 0.53|y|^4, which beats the cubic and
  // linear terms once (1+eta) g phibar^2 x^2 >= eps_hat (|x| + 2r) at |x| = 10 phibar.
  double X = 10.0 * phibar;
  s.tail_ok = r_frak <= phibar && a * X * X >= eps_hat * (X + 2.0 * r_frak);
  s.pass = s.failed_side.empty() && s.tail_ok && s.worst_margin >= -1e-10;
  return s;
}

/// g = (1/g0 + (9 ln L / 16 pi^2) n + amplitude ln(1 + n))^{-1}.
inline double coupling_flow(double g0, double n, double L, double amplitude = 0.0) {
  if (!(g0 > 0)) throw DomainError("coupling_flow: g0 must be positive");
  if (n < 0) throw DomainError("coupling_flow: n must be nonnegative");
  return 1.0 / (1.0 / g0 + kFlowSlope * std::log(L) * n + amplitude * std::log1p(n));
}

/** @brief One named smallness condition with its margin (allowed / actual). */
struct ConditionEntry {
  std::string name;
  std::string label;
  double margin = 0.0;
  double threshold = 1.0;
  bool ok() const { return margin >= threshold; }
};

/** @brief All monitored conditions of a parameter choice. */
struct ConditionLedger {
  std::vector<ConditionEntry> entries;

  void add(std::string name, std::string label, double margin, double threshold) {
    entries.push_back({std::move(name), std::move(label), margin, threshold});
  }
  bool feasible() const {
    for (const auto& e : entries)
      if (!e.ok()) return false;
    return true;
  }
  /// Entry with the smallest margin relative to its threshold.
  const ConditionEntry* binding() const {
    const ConditionEntry* b = nullptr;
    for (const auto& e : entries)
      if (!b || e.margin / e.threshold < b->margin / b->threshold) b = &e;
    return b;
  }
  const ConditionEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

/** @brief Parameter pack of the magnetization-scale construction. */
struct ScaleChoice {
  double h = 0.0;
  double L = 2.0;
  double g0 = 0.0;
  int n = 0;
  double ell = 1.0;
  double Lcal = 1.0;
  double r_frak = 0.0;
  double eps_hat = 0.0;
  double delta = 0.0;
  double eta = 0.25;
  double hbar = 0.0;
  double phibar = 0.0;
  double g = 0.0;
  double nu = 0.0;
  /// Distance of n below the window start, (1/3) log_L h^-1 - (1/12) log_L log h^-1 - n.
  double window_x = 0.0;
  ConditionLedger ledger;
};

/** @brief Knobs of choose_scales besides (h, delta, L, g0). */
struct ScaleOptions {
  double eta = 0.25;
  double margin_min = 10.0;
  double c_g = 1.0;
  double amplitude = 0.0;
  double nu = 0.0;
  double N_cal = 0.0;  ///< Gaussian constant for the reblocking precondition; 0 means computed from alpha = (1/3)(1+eta) + 1/10.
};

inline double log_base(double x, double L) { return std::log(x) / std::log(L); }

/// Gaussian constant (1-2a)^{-1/2} (1 - 2a/B)^{-(B-1)/2}, B = Lcal^4.
inline double gaussian_norm_constant(double alpha, double B) {
  if (!(alpha < 0.5)) throw DivergenceError("gaussian_norm_constant: alpha must be < 1/2", "integration", alpha);
  return std::pow(1.0 - 2.0 * alpha, -0.5) * std::pow(1.0 - 2.0 * alpha / B, -(B - 1.0) / 2.0);
}

inline void fill_ledger(ScaleChoice& s, const ScaleOptions& o) {
  const double e1 = 1.0 + s.eta;
  const double M = o.margin_min;
  const double g = s.g, p = s.phibar, r = s.r_frak, eh = s.eps_hat, Lc = s.Lcal;
  const double gp2 = g * p * p;
  auto& L = s.ledger;
  L.entries.clear();
  L.add("stabcond_eps", "stabcond", g * p * p * r / (e1 * eh), M);
  L.add("stabcond_r", "stabcond", p / (e1 * r), M);
  L.add("sfcondshift", "sfcondshift", std::pow(g, -0.25) / (e1 * p), M);
  double lg = std::log(gp2);
  L.add("condhsnorm", "condhsnorm", 1.0 / (e1 * std::pow(Lc, 24) * gp2 * lg * lg), M);
  L.add("1blockcond1", "1blockcond1", 1.0 / (e1 * std::pow(Lc, 12) * gp2), M);
  L.add("1blockcond2_eps", "1blockcond2", 1.0 / (e1 * std::pow(Lc, 4) * eh * r), M);
  L.add("1blockcond2_r", "1blockcond2", 1.0 / (e1 * std::pow(Lc, 4) * g * p * r * r * r), M);
  L.add("1blockcond3_eps", "1blockcond3", 1.0 / (e1 * std::pow(Lc, 10) * eh), M);
  double x6 = std::pow(Lc, 6);
  L.add("1blockcond3_V", "1blockcond3", 1.0 / (e1 * std::pow(Lc, 4) * std::abs(v_eps(x6, 0.0, g, p))), M);
  L.add("condconvce", "condconvce", Lc * Lc * r * p * std::sqrt(g) / e1, M);
  L.add("condeps", "condeps", std::pow(Lc, 4) * eh * p / e1, M);
  L.add("lfcondshift", "lfcondshift", Lc * p * std::pow(g, 0.25) / e1, M);
  L.add("window_lower", "window", std::pow(s.L, s.window_x), M);
  L.add("window_upper", "window", Lc / std::pow(s.L, s.window_x), M);
}

/**
 * @brief Final parameter choice: magnetization scale, block scales, radii, ledger.
 *
 * The ledger is attached whether or not it is feasible; callers decide on refusal.
 */
inline ScaleChoice choose_scales(double h, double delta, double L, double g0, const ScaleOptions& o = {}) {
  if (!(h > 0 && h < std::exp(-1.0))) throw DomainError("choose_scales: h must lie in (0, 1/e)");
  if (!(delta > 0 && delta < 1)) throw DomainError("choose_scales: delta must lie in (0, 1)");
  if (!(L >= 2)) throw DomainError("choose_scales: L >= 2 required");
  ScaleChoice s;
  s.h = h;
  s.L = L;
  s.g0 = g0;
  s.delta = delta;
  s.eta = o.eta;
  s.nu = o.nu;
  const double lh = std::log(1.0 / h);
  const double centre = log_base(1.0 / h, L) / 3.0 - log_base(lh, L) / 12.0;
  s.n = static_cast<int>(std::floor(centre + log_base(delta, L)));
  if (s.n < 0) throw InfeasibleError("choose_scales: magnetization scale negative", "window");
  s.window_x = centre - s.n;
  s.g = coupling_flow(g0, s.n, L, o.amplitude);
  s.hbar = std::pow(L, 3 * s.n) * h;
  s.phibar = minimize_potential(s.g, s.nu, s.hbar).phibar;
  s.r_frak = delta * delta * s.phibar;
  s.Lcal = std::pow(L, std::floor(log_base(std::pow(delta, -1.75), L) + 1e-12));
  s.eps_hat = 1.0 / (std::pow(s.Lcal, 4) * s.phibar * delta);
  s.ell = s.Lcal;
  for (double cand = 1.0; cand <= s.Lcal; cand *= L)
    if (cand * std::exp(o.c_g / 12.0 * cand) >= s.Lcal) {
      s.ell = cand;
      break;
    }
  fill_ledger(s, o);
  return s;
}

enum class PredictMode { Asymptotic, Refined };

/** @brief Defaults of the refined predictor. */
struct PredictOptions {
  double L = 2.0;
  double delta = 0.2;
  double g0 = 1.0;
  double amplitude = 0.0;
};

/// (3 h ln h^{-1} / 16 pi^2)^{1/3}, or L^{-n} phibar from the scale choice.
inline double predict_magnetization(double h, PredictMode mode, const PredictOptions& o = {}) {
  if (!(h > 0 && h < std::exp(-1.0))) throw DomainError("predict_magnetization: h must lie in (0, 1/e)");
  if (mode == PredictMode::Asymptotic) return std::cbrt(kMagnetizationCoefficient * h * std::log(1.0 / h));
  ScaleOptions so;
  so.amplitude = o.amplitude;
  ScaleChoice s = choose_scales(h, o.delta, o.L, o.g0, so);
  return std::pow(o.L, -s.n) * s.phibar;
}

}  // namespace polygas
