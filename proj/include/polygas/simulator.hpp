#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/sinh_sinh.hpp>

#include "polygas/core.hpp"

namespace polygas {

/** @brief Run parameters of a Metropolis chain on the torus (Z/side)^d. */
struct MCConfig {
  int side = 16;
  int d = 2;
  double g0 = 0.1;
  double nu = 0.5;
  double h = 0.0;
  long sweeps = 4000;
  long burn_in = 500;
  std::uint64_t seed = 1;
  double step = 1.0;
  bool laplacian = true;  ///< nearest-neighbour gradient term
  bool zero_mode = true;  ///< (1/2) V^{-1} (sum psi)^2, V = side^d
  double initial = 0.0;   ///< uniform starting value

  void validate() const {
    if (side < 2) throw ConfigError("MCConfig: side >= 2 required");
    if (d < 1) throw ConfigError("MCConfig: d >= 1 required");
    if (!(sweeps > burn_in && burn_in >= 0)) throw ConfigError("MCConfig: sweeps > burn_in >= 0 required");
    if (!(step > 0)) throw ConfigError("MCConfig: step must be positive");
    if (!(g0 >= 0)) throw ConfigError("MCConfig: g0 must be nonnegative");
    if (g0 == 0 && !(nu > 0)) throw ConfigError("MCConfig: g0 = 0 needs nu > 0");
  }
  long volume() const { return ipow(side, d); }
};

struct Measurement {
  double magnetization = 0.0;
  double std_error = 0.0;
  double acceptance = 0.0;
  double step = 0.0;
  std::vector<double> magnetization_series;
  std::vector<double> energy_series;
};

/**
 * @brief Field configuration with the action split into local and neighbour parts.
 *
 * delta_action is the exact change of action() under psi_i -> psi_i + u.
 */
class PhiFourField {
 public:
  explicit PhiFourField(const MCConfig& c) : c_(c), V_(c.volume()), psi_(V_, c.initial), stride_(c.d) {
    c.validate();
    long s = 1;
    for (int mu = 0; mu < c.d; ++mu) {
      stride_[mu] = s;
      s *= c.side;
    }
    sum_ = c.initial * static_cast<double>(V_);
  }

  long volume() const { return V_; }
  const std::vector<double>& values() const { return psi_; }
  double sum() const { return sum_; }

  long neighbour(long i, int mu, int dir) const {
    long coord = (i / stride_[mu]) % c_.side;
    long next = (coord + dir + c_.side) % c_.side;
    return i + (next - coord) * stride_[mu];
  }

  double local(double x) const { return 0.5 * c_.nu * x * x + 0.25 * c_.g0 * x * x * x * x - c_.h * x; }

  double action() const {
    double s = 0.0;
    for (long i = 0; i < V_; ++i) {
      s += local(psi_[i]);
      if (c_.laplacian)
        for (int mu = 0; mu < c_.d; ++mu) {
          double dpsi = psi_[neighbour(i, mu, +1)] - psi_[i];
          s += 0.5 * dpsi * dpsi;
        }
    }
    if (c_.zero_mode) {
      double m = 0.0;
      for (double v : psi_) m += v;
      s += 0.5 * m * m / static_cast<double>(V_);
    }
    return s;
  }

  double delta_action(long i, double u) const {
    const double x = psi_[i], y = x + u;
    double ds = local(y) - local(x);
    if (c_.laplacian)
      for (int mu = 0; mu < c_.d; ++mu) {
        double f = psi_[neighbour(i, mu, +1)], b = psi_[neighbour(i, mu, -1)];
        ds += 0.5 * ((f - y) * (f - y) - (f - x) * (f - x) + (y - b) * (y - b) - (x - b) * (x - b));
      }
    if (c_.zero_mode) ds += 0.5 * ((sum_ + u) * (sum_ + u) - sum_ * sum_) / static_cast<double>(V_);
    return ds;
  }

  void shift(long i, double u) {
    psi_[i] += u;
    sum_ += u;
  }
  void set(long i, double v) { shift(i, v - psi_[i]); }

 private:
  MCConfig c_;
  long V_;
  std::vector<double> psi_;
  std::vector<long> stride_;
  double sum_ = 0.0;
};

/// Standard error of the mean from the blocking (repeated halving) analysis; max over levels with >= 32 blocks.
inline double blocking_error(const std::vector<double>& x) {
  std::vector<double> b = x;
  double best = 0.0;
  while (b.size() >= 32) {
    const double n = static_cast<double>(b.size());
    double mean = 0.0;
    for (double v : b) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : b) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    best = std::max(best, std::sqrt(var / n));
    std::vector<double> half(b.size() / 2);
    for (std::size_t k = 0; k < half.size(); ++k) half[k] = 0.5 * (b[2 * k] + b[2 * k + 1]);
    b.swap(half);
  }
  return best;
}

/// Single-site Metropolis with uniform proposals; step tuned towards 50% acceptance during burn-in.
inline Measurement run_chain(const MCConfig& c) {
  PhiFourField f(c);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const long V = f.volume();
  double step = c.step;
  Measurement out;
  long accepted = 0, proposed = 0;
  for (long sweep = 0; sweep < c.sweeps; ++sweep) {
    long acc_sweep = 0;
    for (long i = 0; i < V; ++i) {
      double u = step * (2.0 * unif(rng) - 1.0);
      double ds = f.delta_action(i, u);
      if (ds <= 0.0 || unif(rng) < std::exp(-ds)) {
        f.shift(i, u);
        ++acc_sweep;
      }
    }
    if (sweep < c.burn_in) {
      double rate = static_cast<double>(acc_sweep) / V;
      if (rate < 0.4 || rate > 0.6) step *= std::clamp(rate / 0.5, 0.5, 2.0);
      continue;
    }
    accepted += acc_sweep;
    proposed += V;
    out.magnetization_series.push_back(f.sum() / static_cast<double>(V));
    out.energy_series.push_back(f.action());
  }
  double m = 0.0;
  for (double v : out.magnetization_series) m += v;
  out.magnetization = m / static_cast<double>(out.magnetization_series.size());
  out.std_error = blocking_error(out.magnetization_series);
  if (out.std_error == 0.0) {
    // fewer than 32 samples: plain standard error
    const double n = static_cast<double>(out.magnetization_series.size());
    double var = 0.0;
    for (double v : out.magnetization_series) var += (v - out.magnetization) * (v - out.magnetization);
    out.std_error = n > 1 ? std::sqrt(var / (n - 1) / n) : std::numeric_limits<double>::infinity();
  }
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(proposed);
  out.step = step;
  return out;
}

/// Independent chains with seeds seed, seed+1, ...; merged in seed order with inverse-variance weights.
inline Measurement run_chains(const MCConfig& c, int chains) {
  std::vector<Measurement> runs(chains);
  parallel_for(static_cast<std::size_t>(chains), [&](std::size_t k) {
    MCConfig ck = c;
    ck.seed = c.seed + k;
    runs[k] = run_chain(ck);
  });
  Measurement m;
  double wsum = 0.0, acc = 0.0;
  for (const auto& r : runs) {
    double w = 1.0 / (r.std_error * r.std_error);
    m.magnetization += w * r.magnetization;
    wsum += w;
    acc += r.acceptance;
    m.magnetization_series.insert(m.magnetization_series.end(), r.magnetization_series.begin(),
                                  r.magnetization_series.end());
    m.energy_series.insert(m.energy_series.end(), r.energy_series.begin(), r.energy_series.end());
  }
  m.magnetization /= wsum;
  m.std_error = 1.0 / std::sqrt(wsum);
  m.acceptance = acc / chains;
  m.step = runs.front().step;
  return m;
}

/// <psi> under exp(-(nu/2) x^2 - (g0/4) x^4 + h x), by sinh-sinh quadrature.
inline double decoupled_magnetization(double g0, double nu, double h) {
  if (!(g0 > 0 || nu > 0)) throw DomainError("decoupled_magnetization: weight not normalizable");
  // shift by the mode to keep exponents small
  double x0 = 0.0;
  for (int it = 0; it < 200; ++it) {
    double f = nu * x0 + g0 * x0 * x0 * x0 - h, fp = nu + 3 * g0 * x0 * x0;
    if (fp <= 0) fp = 1.0;
    double nx = x0 - f / fp;
    if (std::abs(nx - x0) < 1e-15 * (1 + std::abs(x0))) break;
    x0 = nx;
  }
  auto S = [&](double x) { return 0.5 * nu * x * x + 0.25 * g0 * x * x * x * x - h * x; };
  const double s0 = S(x0);
  boost::math::quadrature::sinh_sinh<double> q;
  auto w = [&](double t) { return std::exp(-(S(x0 + t) - s0)); };
  double z = q.integrate(w);
  double num = q.integrate([&](double t) { return t * w(t); });
  return x0 + num / z;
}

struct ScanRow {
  double h = 0.0;
  double m = 0.0;
  double sigma = 0.0;
  double oracle = std::numeric_limits<double>::quiet_NaN();
};

struct FieldScan {
  std::vector<ScanRow> rows;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double exponent_ci = std::numeric_limits<double>::quiet_NaN();  ///< 95% half-width
};

/// Chains over sorted positive h values; weighted log-log fit of m against h over rows with m > 0.
inline FieldScan field_scan(const MCConfig& c, const std::vector<double>& hs) {
  for (std::size_t k = 0; k < hs.size(); ++k) {
    if (!(hs[k] > 0)) throw DomainError("field_scan: h values must be positive");
    if (k && !(hs[k] > hs[k - 1])) throw DomainError("field_scan: h values must be sorted");
  }
  FieldScan out;
  out.rows.resize(hs.size());
  parallel_for(hs.size(), [&](std::size_t k) {
    MCConfig ck = c;
    ck.h = hs[k];
    ck.seed = c.seed + 1000 * k;
    auto m = run_chain(ck);
    ScanRow r{hs[k], m.magnetization, m.std_error};
    if (!c.laplacian && !c.zero_mode) r.oracle = decoupled_magnetization(c.g0, c.nu, hs[k]);
    out.rows[k] = r;
  });
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (const auto& r : out.rows) {
    if (!(r.m > 0)) continue;
    double x = std::log(r.h), y = std::log(r.m);
    double sy_rel = r.sigma / r.m;
    double w = 1.0 / std::max(sy_rel * sy_rel, 1e-300);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++used;
  }
  if (used >= 2) {
    double det = sw * sxx - sx * sx;
    out.exponent = (sw * sxy - sx * sy) / det;
    out.exponent_ci = 1.96 * std::sqrt(sw / det);
  }
  return out;
}

}  // namespace polygas
