#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "polygas/core.hpp"
#include "polygas/potential.hpp"

namespace polygas {

/** @brief Norms propagated through the pipeline; all nonnegative. */
struct NormBundle {
  double norm_g = 0.0;
  double norm_g_Delta = 0.0;
  double norm_g_tilde = 0.0;
  double norm_sfg = 0.0;
  double norm_sfg_square = 0.0;
  double norm_A = 0.0;
  double norm_sfA = 0.0;
  double min_single = 1.0;
};

/**
 * @brief Modelling constants of the input representation; placeholders, not derived values.
 *
 * c1 <= 0 means sqrt(ell); c2 <= 0 means 10 c1.
 */
struct GKConstants {
  double c_g = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c_A = 1.0;
  double c_K = 1.0;
  double c_nu = 1.0;
  double c_z = 1.0;
  double C_mu = 1.0;
  double c_mu = 0.5;
  double c_mu_prime = 0.05;
  double c_loc = 1.0;
  double a_norm = 1.0;       ///< ||A|| used by the localization step
  double gamma_const = 1.0;  ///< ||Gamma|| = gamma_const Lcal^{-2} (g phibar^2)^{-1/2}
  double c_B = 1.0;          ///< constant of the single-block bound

  GKConstants resolved(double ell) const {
    GKConstants c = *this;
    if (c.c1 <= 0) c.c1 = std::sqrt(ell);
    if (c.c2 <= 0) c.c2 = 10.0 * c.c1;
    return c;
  }
  /// c2 >= c1 is the expected ordering; reported, not enforced.
  bool ordering_ok(double ell) const {
    auto c = resolved(ell);
    return c.c2 >= c.c1;
  }
};

// ---------------------------------------------------------------------------
// Series evaluators
// ---------------------------------------------------------------------------

/// sum_{n>=1} x^n / n, summed until terms fall below 1e-16 of the partial sum, plus geometric tail.
inline double log_series(double x) {
  if (x < 0 || !(x < 1)) throw DivergenceError("log_series: argument outside [0, 1)", "series", x);
  if (x == 0) return 0.0;
  double acc = 0.0, p = 1.0;
  for (int n = 1;; ++n) {
    p *= x;
    double t = p / n;
    acc += t;
    if (t < 1e-16 * acc) return acc + p * x / ((n + 1) * (1 - x));
  }
}

/// sum_{n>=1} x^n / n^2.
inline double dilog_series(double x) {
  if (x < 0 || x > 1) throw DivergenceError("dilog_series: argument outside [0, 1]", "series", x);
  if (x == 0) return 0.0;
  if (x == 1) return M_PI * M_PI / 6.0;
  double acc = 0.0, p = 1.0;
  for (int n = 1;; ++n) {
    p *= x;
    double t = p / (static_cast<double>(n) * n);
    acc += t;
    if (t < 1e-16 * acc) return acc + p * x / ((static_cast<double>(n) + 1) * (n + 1) * (1 - x));
  }
}

/// sum_{n=1}^{cap} x^n / n; cap <= 0 means no cap.
inline double log_series_capped(double x, long cap) {
  if (cap <= 0) return log_series(x);
  double acc = 0.0, p = 1.0;
  for (long n = 1; n <= cap; ++n) {
    p *= x;
    acc += p / static_cast<double>(n);
    if (p / n < 1e-16 * acc) {
      if (x < 1) acc += p * x / ((n + 1) * (1 - x));
      break;
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Propagation steps
// ---------------------------------------------------------------------------

/**
 * @brief 30 sum_{0 != k in Z^4} exp(-c_g ell |k|), shells |k|_inf = m summed with a tail bound.
 */
inline double tree_constant(double c_g, double ell, int d = 4) {
  const double a = c_g * ell;
  if (!(a > 0)) throw DomainError("tree_constant: c_g ell must be positive");
  double acc = 0.0;
  for (int m = 1;; ++m) {
    double shell = 0.0;
    std::vector<int> k(d, -m);
    while (true) {
      int linf = 0;
      double n2 = 0.0;
      for (int v : k) {
        linf = std::max(linf, std::abs(v));
        n2 += static_cast<double>(v) * v;
      }
      if (linf == m) shell += std::exp(-a * std::sqrt(n2));
      int i = 0;
      while (i < d && ++k[i] > m) k[i++] = -m;
      if (i == d) break;
    }
    acc += shell;
    // remaining shells: count (2j+1)^d - (2j-1)^d, each term at most exp(-a j)
    double tail = 0.0;
    for (int j = m + 1; j < m + 400; ++j)
      tail += (std::pow(2.0 * j + 1, d) - std::pow(2.0 * j - 1, d)) * std::exp(-a * j);
    if (tail < 1e-16 * acc || m > 60) return 30.0 * (acc + tail);
  }
}

struct InputNormArgs {
  double ell = 1.0;
  double Lcal = 1.0;
  int d = 4;
  GKConstants constants;
  double r_frak = 0.0;
  double eps_hat = 0.0;
  double g = 0.0;
  double phibar = 0.0;
  double eta = 0.1;
  long lattice_cubes = 0;  ///< |Lambda|_ell, 0 for the infinite-volume sum
};

struct InputNorms {
  double C_ell = 0.0;
  double norm_g = 0.0;
  double norm_g_Delta = 0.0;
  double norm_g_tilde = 0.0;
  double activity_exponent = 0.0;  ///< 3 r(eps_hat + 12 g phibar r^2) per unit volume
};

/**
 * @brief Bounds on the three input norms from the representation.
 *
 * Preconditions (margin > 1 with slack eta): stabcond, sfcondshift, 1blockcond2, condconvce.
 */
inline InputNorms input_norms(const InputNormArgs& a) {
  const double e1 = 1.0 + a.eta;
  const double g = a.g, p = a.phibar, r = a.r_frak, eh = a.eps_hat, Lc = a.Lcal;
  struct Pre {
    const char* name;
    double margin;
  } pre[] = {
      {"stabcond_eps", g * p * p * r / (e1 * eh)},
      {"stabcond_r", p / (e1 * r)},
      {"sfcondshift", std::pow(g, -0.25) / (e1 * p)},
      {"1blockcond2_eps", 1.0 / (e1 * std::pow(Lc, a.d) * eh * r)},
      {"1blockcond2_r", 1.0 / (e1 * std::pow(Lc, a.d) * g * p * r * r * r)},
      {"condconvce", Lc * Lc * r * p * std::sqrt(g) / e1},
  };
  for (const auto& c : pre)
    if (!(c.margin > 1.0)) throw InfeasibleError(std::string("input_norms: precondition ") + c.name + " fails", c.name);
  InputNorms n;
  n.C_ell = tree_constant(a.constants.c_g, a.ell, a.d);
  if (!(n.C_ell < 1.0)) throw DivergenceError("input_norms: C(ell) >= 1, ell too small", "ell", n.C_ell);
  long cap = a.lattice_cubes > 0 ? a.lattice_cubes - 1 : 0;
  n.norm_g = log_series_capped(n.C_ell, cap);
  const double ratio4 = std::pow(a.Lcal / a.ell, a.d);
  n.norm_g_Delta = std::pow(e1, 1.0 / ratio4);
  n.norm_g_tilde = std::exp(-a.constants.c_g * a.ell / 3.0);
  n.activity_exponent = 3.0 * r * (eh + 12.0 * g * p * r * r);
  return n;
}

/// Right side of the reblocking precondition, 2 (2 e^3 N)^{-2/ratio4}.
inline double reblock_precondition_rhs(double Ncal, double ratio4) {
  return 2.0 * std::pow(2.0 * std::exp(3.0) * Ncal, -2.0 / ratio4);
}

struct ReblockBounds {
  double norm_sfg = 0.0;
  double norm_sfg_square = 0.0;
  double argument = 0.0;
};

inline ReblockBounds reblock_bounds(double norm_g, double norm_g_Delta, double ratio4, double Ncal) {
  if (norm_g < 0 || norm_g_Delta < 0) throw DomainError("reblock_bounds: norms must be nonnegative");
  const double lhs = std::pow(norm_g_Delta, ratio4);
  if (lhs > reblock_precondition_rhs(Ncal, ratio4))
    throw InfeasibleError("reblock_bounds: single-cube norm too large for reblocking", "reblock_precondition");
  ReblockBounds b;
  b.argument = 8.0 * ratio4 * norm_g;
  if (!(b.argument < 1.0)) throw DivergenceError("reblock_bounds: 8 (Lcal/ell)^4 ||g|| >= 1", "reblock", b.argument);
  b.norm_sfg = log_series(b.argument);
  b.norm_sfg_square = lhs * (b.argument > 0 ? b.norm_sfg / b.argument : 1.0);
  return b;
}

struct LocalizationBound {
  double q = 0.0;
  double norm_A = 0.0;
};

inline LocalizationBound localization_bound(double norm_sfg, double norm_sfg_square, double a_norm,
                                            double gamma_norm, double r_frak, double c_loc) {
  if (!(r_frak > 0)) throw DomainError("localization_bound: r must be positive");
  const double s = norm_sfg_square + norm_sfg;
  LocalizationBound b;
  b.q = c_loc * a_norm * gamma_norm * s / r_frak;
  if (!(b.q < 1.0)) throw DivergenceError("localization_bound: q >= 1", "localization", b.q);
  b.norm_A = norm_sfg + s * log_series(b.q);
  return b;
}

/// alpha = (1 + eta)/3 + 1/10, written so that eta = 0.2 gives exactly 1/2.
inline double integration_alpha(double eta) { return (10.0 * (1.0 + eta) + 3.0) / 30.0; }

inline double integration_bound(double norm_A, double eta, double B) {
  return gaussian_norm_constant(integration_alpha(eta), B) * norm_A;
}

struct MayerBound {
  double ratio = 0.0;
  double tail = 0.0;
  double per_site = 0.0;
};

/// Refuses when min_single <= 1/2 (so Re A({x}) > 1/2 cannot hold) or ||A|| >= min_single.
inline MayerBound mayer_bound(double norm_sfA, double min_single, double log_single = 0.0) {
  if (!(min_single > 0.5)) throw DivergenceError("mayer_bound: min |A({x})| <= 1/2", "mayer", min_single);
  MayerBound m;
  m.ratio = norm_sfA / min_single;
  if (!(m.ratio < 1.0)) throw DivergenceError("mayer_bound: ||A|| >= min |A({x})|", "mayer", m.ratio);
  m.tail = 0.5 * dilog_series(m.ratio);
  m.per_site = log_single + m.tail;
  return m;
}

inline double single_point_bound(double norm_g_tilde, double ratio4, double eta) {
  const double x = ratio4 * norm_g_tilde;
  if (!(x < 1.0)) throw DivergenceError("single_point_bound: (Lcal/ell)^4 ||g~|| >= 1", "single_point", x);
  return (1.0 + eta) * x / (1.0 - x);
}

/// exp(3 B r (eps_hat + 12 g phibar r^2)) B V(Lcal^6) with V(x) = eps_hat x + g phibar x^3 + g x^4 / 4.
inline double single_block_shape(double Lcal, int d, double r, double eps_hat, double g, double phibar) {
  const double B = std::pow(Lcal, d);
  const double x6 = std::pow(Lcal, 6);
  const double V = eps_hat * x6 + g * phibar * std::pow(x6, 3) + 0.25 * g * std::pow(x6, 4);
  return std::exp(3 * B * r * (eps_hat + 12 * g * phibar * r * r)) * B * V;
}

// ---------------------------------------------------------------------------
// Ledger and certificate
// ---------------------------------------------------------------------------

/// Scale ledger plus the reblocking precondition at the scale's (ell, Lcal).
inline ConditionLedger condition_ledger(const ScaleChoice& s, double margin_min = 10.0) {
  ConditionLedger L = s.ledger;
  const double ratio4 = std::pow(s.Lcal / s.ell, 4);
  double rhs = 0.0;
  try {
    rhs = reblock_precondition_rhs(gaussian_norm_constant(integration_alpha(s.eta), std::pow(s.Lcal, 4)), ratio4);
  } catch (const DivergenceError&) {
    rhs = 0.0;
  }
  L.add("reblock_precondition", "reblock", rhs / (1.0 + s.eta), margin_min);
  return L;
}

struct CertificateStage {
  std::string name;
  bool ok = false;
  double value = 0.0;
  std::string detail;
  std::string condition;  ///< precondition or divergence stage reported by the failure
};

struct Certificate {
  ScaleChoice scale;
  ConditionLedger ledger;
  NormBundle bundle;
  std::vector<CertificateStage> stages;
  bool refused = true;
  std::string binding_stage;
  std::string binding_condition;
  double m_leading = 0.0;
  double m_asymptotic = 0.0;
  double per_site_log_bound = std::numeric_limits<double>::infinity();
  double m_prime_bound = std::numeric_limits<double>::infinity();
  double relative_bound = std::numeric_limits<double>::infinity();
};

struct CertificateOptions {
  double eta = 0.1;
  double margin_min = 10.0;
  GKConstants constants;
  std::optional<double> r_frak_override;
  double amplitude = 0.0;
};

/**
 * @brief input_norms -> reblock -> localization -> integration -> single point -> Mayer at a fixed scale.
 *
 * Stages run in fixed order; the first failing stage is the binding stage. A pipeline
 * that passes every stage with an infeasible ledger is refused at "ledger".
 */
inline Certificate certify_scale(const ScaleChoice& scale, const CertificateOptions& o = {}) {
  Certificate c;
  c.scale = scale;
  const ScaleChoice& s = c.scale;
  const double h = s.h, L = s.L;
  c.ledger = condition_ledger(s, o.margin_min);
  if (const auto* b = c.ledger.binding()) c.binding_condition = b->name;
  c.m_leading = std::pow(L, -s.n) * s.phibar;
  c.m_asymptotic = std::cbrt(kMagnetizationCoefficient * h * std::log(1.0 / h));

  const GKConstants K = o.constants.resolved(s.ell);
  const double ratio4 = std::pow(s.Lcal / s.ell, 4);
  auto stage = [&](const std::string& name, auto&& fn) -> bool {
    CertificateStage st;
    st.name = name;
    try {
      st.value = fn();
      st.ok = std::isfinite(st.value);
      if (!st.ok) st.detail = "non-finite bound";
    } catch (const DivergenceError& e) {
      st.detail = e.what();
      st.value = e.value;
      st.condition = e.stage;
    } catch (const InfeasibleError& e) {
      st.detail = e.what();
      st.condition = e.binding;
    } catch (const Error& e) {
      st.detail = e.what();
    }
    c.stages.push_back(st);
    if (!st.ok && c.binding_stage.empty()) {
      c.binding_stage = name;
      if (!st.condition.empty()) c.binding_condition = st.condition;
    }
    return st.ok;
  };

  NormBundle& nb = c.bundle;
  InputNormArgs ia;
  ia.ell = s.ell;
  ia.Lcal = s.Lcal;
  ia.constants = K;
  ia.r_frak = s.r_frak;
  ia.eps_hat = s.eps_hat;
  ia.g = s.g;
  ia.phibar = s.phibar;
  ia.eta = s.eta;
  bool ok = stage("input_norms", [&] {
    auto in = input_norms(ia);
    nb.norm_g = in.norm_g;
    nb.norm_g_Delta = in.norm_g_Delta;
    nb.norm_g_tilde = in.norm_g_tilde;
    return in.norm_g;
  });
  double Ncal = 0.0;
  ok = ok && stage("reblock", [&] {
    Ncal = gaussian_norm_constant(integration_alpha(s.eta), std::pow(s.Lcal, 4));
    auto rb = reblock_bounds(nb.norm_g, nb.norm_g_Delta, ratio4, Ncal);
    nb.norm_sfg = rb.norm_sfg;
    nb.norm_sfg_square = rb.norm_sfg_square;
    return rb.norm_sfg;
  });
  ok = ok && stage("localization", [&] {
    double gamma_norm = K.gamma_const * std::pow(s.Lcal, -2) / std::sqrt(s.g * s.phibar * s.phibar);
    auto lb = localization_bound(nb.norm_sfg, nb.norm_sfg_square, K.a_norm, gamma_norm, s.r_frak, K.c_loc);
    nb.norm_A = lb.norm_A;
    return lb.norm_A;
  });
  ok = ok && stage("integration", [&] {
    nb.norm_sfA = integration_bound(nb.norm_A, s.eta, std::pow(s.Lcal, 4));
    return nb.norm_sfA;
  });
  double u = 0.0;
  ok = ok && stage("single_point", [&] {
    double sp = single_point_bound(nb.norm_g_tilde, ratio4, s.eta);
    double bdev = K.c_B * single_block_shape(s.Lcal, 4, s.r_frak, s.eps_hat, s.g, s.phibar);
    u = sp + bdev;
    if (!(u < 0.5)) throw DivergenceError("single_point: |A({x}) - 1| bound >= 1/2", "single_point", u);
    nb.min_single = 1.0 - u;
    return u;
  });
  ok = ok && stage("mayer", [&] {
    auto mb = mayer_bound(nb.norm_sfA, nb.min_single, -std::log(1.0 - u));
    c.per_site_log_bound = mb.per_site;
    if (!(mb.per_site <= 0.5)) throw DivergenceError("mayer: per-site |log Z| bound > 1/2", "mayer", mb.per_site);
    return mb.per_site;
  });
  if (ok && !c.ledger.feasible()) c.binding_stage = "ledger";
  c.refused = !c.binding_stage.empty();
  if (!c.refused) {
    c.m_prime_bound = 0.5 * std::pow(L, -s.n) / (std::pow(s.Lcal, 4) * s.eps_hat);
    c.relative_bound = c.m_prime_bound / c.m_leading + std::abs(c.m_leading / c.m_asymptotic - 1.0);
  }
  return c;
}

/// Scale choice from (h, delta, L, g0), optional r override, then certify_scale.
inline Certificate error_certificate(double h, double delta, double L, double g0, const CertificateOptions& o = {}) {
  ScaleOptions so;
  so.eta = o.eta;
  so.margin_min = o.margin_min;
  so.c_g = o.constants.c_g;
  so.amplitude = o.amplitude;
  ScaleChoice s = choose_scales(h, delta, L, g0, so);
  if (o.r_frak_override) {
    s.r_frak = *o.r_frak_override;
    fill_ledger(s, so);
  }
  return certify_scale(s, o);
}

}  // namespace polygas
