#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "polygas/covariance.hpp"
#include "polygas/lattice.hpp"
#include "polygas/polymer.hpp"
#include "polygas/potential.hpp"
#include "polygas/quadrature.hpp"

namespace polygas {

// ---------------------------------------------------------------------------
// Field activities and finite differences
// ---------------------------------------------------------------------------

/** @brief Activity evaluated on (psi, psi', phi); only values inside the support are read. */
struct FieldActivity {
  Mask support = 0;
  std::function<double(const std::vector<double>&, const std::vector<double>&, const std::vector<double>&)> eval;
};

/**
 * @brief Fourth-order central difference of t -> f(t) at 0, checked against step 2h.
 *
 * Throws NumericError when the two estimates disagree by more than `tol` (relative to max(1, |d|)).
 */
inline double richardson_derivative(const std::function<double(double)>& f, double h = 1e-4, double tol = 1e-5) {
  auto d4 = [&](double s) { return (-f(2 * s) + 8 * f(s) - 8 * f(-s) + f(-2 * s)) / (12 * s); };
  double a = d4(h), b = d4(2 * h);
  if (!std::isfinite(a) || std::abs(a - b) > tol * std::max(1.0, std::abs(a))) {
    std::ostringstream os;
    os << "richardson_derivative: unstable at step " << h << " (estimates " << a << " and " << b << ")";
    throw NumericError(os.str());
  }
  return a;
}

// ---------------------------------------------------------------------------
// Shifted activity over a toy large-field polymer gas
// ---------------------------------------------------------------------------

/**
 * @brief Toy base gas: k(Y; psi) = c_Y exp(-b int_{box Y} sin^2 psi) on paved sets Y.
 *
 * Z4(psi) = exp(-(g/4) int psi^4) sum_{partitions} prod k(Y; psi). For any large-field set D the
 * activities g^D(X) = exp(-(g/4) int_{box (X cap D)} psi^4) K^D(X) reproduce Z4, where K^D(X)
 * sums the partitions of X that the D-closure merge glues into X.
 */
struct ToyBaseGas {
  std::map<Mask, double> c;
  double b = 0.1;
};

/** @brief Parameters of the shift by phibar. */
struct ShiftParams {
  double g = 0.5;
  double nu = 0.0;
  double hbar = 0.0;
  double phibar = 0.0;  ///< must minimise the effective potential at (g, nu, hbar)
  double eps = 0.0;
  double threshold = 1.0;
  double rate = 1.0;
};

class ShiftedActivity {
 public:
  ShiftedActivity(const LatticeHierarchy& h, const BackgroundKernel& A, const Covariance& cov, ToyBaseGas base,
                  ShiftParams p)
      : h_(&h), A_(&A), cov_(&cov), base_(std::move(base)), p_(p) {
    cubes_ = static_cast<int>(h.paving().volume());
    if (cubes_ > 16) throw CapacityError("ShiftedActivity: more than 16 paving cubes");
    w_ = 1.0 / h.block_volume();
    fine_.resize(cubes_);
    coarse_sites_.resize(cubes_);
    closure_.resize(cubes_);
    for (int b = 0; b < cubes_; ++b) {
      for (auto x : h.cube_sites(b)) {
        coarse_sites_[b].push_back(x);
        for (auto xi : h.block_sites(x)) fine_[b].push_back(xi);
      }
      for (int nb : closure(h, PavedSet{{b}}).blocks) closure_[b] |= Mask{1} << nb;
    }
  }

  int cubes() const { return cubes_; }
  const ShiftParams& params() const { return p_; }

  Mask closure_mask(Mask X) const {
    Mask out = 0;
    for (int b : mask_members(X)) out |= closure_[b];
    return out;
  }

  double base(Mask Y, const std::vector<double>& psi) const {
    auto it = base_.c.find(Y);
    if (it == base_.c.end()) return 0.0;
    double s = 0.0;
    for (int b : mask_members(Y))
      for (auto xi : fine_[b]) s += std::sin(psi[xi]) * std::sin(psi[xi]);
    return it->second * std::exp(-base_.b * w_ * s);
  }

  /// Sum over partitions of X into base polymers whose D-merge graph is connected.
  double merged(Mask X, Mask D, const std::vector<double>& psi) const {
    double total = 0.0;
    std::vector<Mask> chosen;
    std::function<void(Mask, double)> rec = [&](Mask left, double prod) {
      if (left == 0) {
        const int m = static_cast<int>(chosen.size());
        std::uint32_t reached = 1u, frontier = 1u;
        while (frontier) {
          std::uint32_t next = 0;
          for (int i = 0; i < m; ++i)
            if (frontier >> i & 1u)
              for (int j = 0; j < m; ++j)
                if (!(reached >> j & 1u) && ((closure_mask(chosen[i] & D) & chosen[j]) ||
                                             (closure_mask(chosen[j] & D) & chosen[i])))
                  next |= 1u << j;
          reached |= next;
          frontier = next;
        }
        if (reached == full_mask(m)) total += prod;
        return;
      }
      Mask low = left & (~left + 1u);
      for (const auto& [Y, cY] : base_.c) {
        if (!(Y & low) || (Y & ~left)) continue;
        chosen.push_back(Y);
        rec(left ^ Y, prod * base(Y, psi));
        chosen.pop_back();
      }
    };
    rec(X, 1.0);
    return total;
  }

  double gD(Mask X, Mask D, const std::vector<double>& psi) const {
    double q = 0.0;
    for (int b : mask_members(X & D))
      for (auto xi : fine_[b]) q += std::pow(psi[xi], 4);
    return std::exp(-0.25 * p_.g * w_ * q) * merged(X, D, psi);
  }

  /// R(phi|_X) = D(2 Gamma phi|_X + phibar).
  Mask large_field(Mask X, const std::vector<double>& phi) const {
    std::vector<double> f(phi.size(), 0.0);
    for (int b : mask_members(X))
      for (auto x : coarse_sites_[b]) f[x] = phi[x];
    f = cov_->Gamma.apply(f);
    for (auto& v : f) v = 2.0 * v + p_.phibar;
    Mask R = 0;
    for (int b : large_field_set(*A_, f, p_.threshold, p_.rate).blocks) R |= Mask{1} << b;
    return R;
  }

  /// g(X; (psi, psi'); phi), zero unless X contains the closure of R(phi|_X).
  double operator()(Mask X, const std::vector<double>& psi, const std::vector<double>& psip,
                    const std::vector<double>& phi) const {
    Mask R = large_field(X, phi);
    if (closure_mask(R) & ~X) return 0.0;
    const double g = p_.g, pb = p_.phibar;
    const double lin = p_.hbar + p_.eps - p_.nu * pb;
    double expo = 0.25 * g * std::pow(pb, 4) * std::popcount(R) * static_cast<double>(coarse_sites_[0].size());
    std::vector<double> shifted(psi.size(), 0.0);
    for (int b : mask_members(X))
      for (auto xi : fine_[b]) {
        double chi = psi[xi] + psip[xi];
        shifted[xi] = chi + pb;
        if (R >> b & 1u) expo += w_ * (lin * chi + 1.5 * g * pb * pb * chi * chi);
        else expo -= w_ * v_eps(chi, p_.eps, g, pb);
      }
    return std::exp(expo) * gD(X, R, shifted);
  }

  FieldActivity activity(Mask X) const {
    return {X, [this, X](const std::vector<double>& psi, const std::vector<double>& psip,
                         const std::vector<double>& phi) { return (*this)(X, psi, psip, phi); }};
  }

  /// The shifted toy effective action, evaluated literally.
  double direct(const std::vector<double>& chi) const {
    const double g = p_.g, pb = p_.phibar;
    const double lin = p_.hbar + p_.eps - p_.nu * pb;
    double expo = 0.25 * g * std::pow(pb, 4) * static_cast<double>(h_->block().volume());
    std::vector<double> shifted(chi.size());
    for (std::size_t xi = 0; xi < chi.size(); ++xi) {
      shifted[xi] = chi[xi] + pb;
      expo += w_ * (lin * chi[xi] + 1.5 * g * pb * pb * chi[xi] * chi[xi]);
      expo -= 0.25 * g * w_ * std::pow(shifted[xi], 4);
    }
    double Z = partition_sum_generic<double>(full_mask(cubes_), [&](Mask Y) { return base(Y, shifted); }, 1.0, 0.0);
    return std::exp(expo) * Z;
  }

  /** @brief Both sides of the partition identity at one phi. */
  struct IdentityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_error = 0.0;
    Mask global_large_field = 0;
  };

  IdentityReport partition_identity(const std::vector<double>& phi) const {
    std::vector<double> chi = A_->apply(Field{Level::Block, cov_->Gamma.apply(phi)}).values;
    std::vector<double> zero(chi.size(), 0.0);
    std::map<Mask, double> act;
    IdentityReport r;
    r.lhs = partition_sum_generic<double>(
        full_mask(cubes_),
        [&](Mask X) {
          auto it = act.find(X);
          if (it != act.end()) return it->second;
          double v = (*this)(X, chi, zero, phi);
          act[X] = v;
          return v;
        },
        1.0, 0.0);
    r.rhs = direct(chi);
    r.rel_error = std::abs(r.lhs - r.rhs) / std::abs(r.rhs);
    r.global_large_field = large_field(full_mask(cubes_), phi);
    return r;
  }

 private:
  const LatticeHierarchy* h_;
  const BackgroundKernel* A_;
  const Covariance* cov_;
  ToyBaseGas base_;
  ShiftParams p_;
  int cubes_ = 0;
  double w_ = 1.0;
  std::vector<std::vector<std::size_t>> fine_;
  std::vector<std::vector<std::size_t>> coarse_sites_;
  std::vector<Mask> closure_;
};

// ---------------------------------------------------------------------------
// Single- and two-block activities at reduced dimension
// ---------------------------------------------------------------------------

/**
 * @brief Two blocks with k Gaussian coordinates each.
 *
 * Column order is (x coordinates, y coordinates); row i of Kx is the functional
 * (A Gamma phi) at the i-th sample point of the fine image of block x.
 */
struct BlockPairModel {
  int k = 1;
  Eigen::MatrixXd Kx;
  Eigen::MatrixXd Ky;
  double weight = 1.0;
  double g = 0.0;
  double phibar = 0.0;
  double eps = 0.0;
};

/// Restricts A Gamma to the first k sites of coarse blocks X and Y.
inline BlockPairModel reduce_block_pair(const Covariance& c, std::size_t X, std::size_t Y, int k, double eps = 0.0) {
  const auto& h = *c.h;
  const auto& sx = h.coarse_sites(X);
  const auto& sy = h.coarse_sites(Y);
  if (k < 1 || k > static_cast<int>(sx.size())) throw DomainError("reduce_block_pair: k out of range");
  if (k > 4) throw CapacityError("reduce_block_pair: at most 4 coordinates per block");
  auto rows = [&](std::size_t B) {
    auto fine = h.fine_of_coarse(B);
    Eigen::MatrixXd K(fine.size(), 2 * k);
    for (std::size_t r = 0; r < fine.size(); ++r)
      for (int j = 0; j < k; ++j) {
        K(r, j) = c.agamma(fine[r], sx[j]);
        K(r, k + j) = c.agamma(fine[r], sy[j]);
      }
    return K;
  };
  BlockPairModel m;
  m.k = k;
  m.Kx = rows(X);
  m.Ky = rows(Y);
  m.weight = 1.0 / h.block_volume();
  m.g = c.g;
  m.phibar = c.phibar;
  m.eps = eps;
  return m;
}

namespace detail {
inline double dv_eps(double x, double eps, double g, double pb) { return -eps + 3 * g * pb * x * x + g * x * x * x; }

inline double block_action(const Eigen::MatrixXd& K, const Eigen::VectorXd& arg, const BlockPairModel& m) {
  Eigen::VectorXd psi = K * arg;
  double s = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) s += v_eps(psi[i], m.eps, m.g, m.phibar);
  return m.weight * s;
}

inline double guarded_exp(double x) {
  if (x > 700.0) throw StabilityError("block integral: integrand overflow, stability conditions violated");
  return std::exp(x);
}
}  // namespace detail

/** @brief B(box_x) with its first-order term and the measured constant of the shape bound. */
struct SingleBlockReport {
  double value = 0.0;
  double first_order = 0.0;     ///< 1 - int int V_eps d mu, Gaussian moments in closed form
  double shape = 0.0;           ///< exp(3 B r(eps_hat + 12 g phibar r^2)) B V(Lcal^6)
  double measured_const = 0.0;  ///< |B - 1| / shape
};

struct BlockOptions {
  int q = 10;          ///< Gauss-Hermite points per axis
  int s_points = 8;    ///< Gauss-Legendre points for the interpolation parameter
  double eps_hat = 0.0;
  double r_frak = 0.0;
  double Lcal = 1.0;
  int d = 4;
  double gamma_y = 1.0;  ///< ||Gamma||_y for the two-block comparison
};

inline SingleBlockReport single_block_B(const BlockPairModel& m, const BlockOptions& o = {}) {
  if (m.g < 0) throw StabilityError("single_block_B: negative quartic coupling");
  const int k = m.k;
  Eigen::MatrixXd Kx = m.Kx.leftCols(k);
  SingleBlockReport r;
  auto f = [&](const std::vector<double>& x) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), k);
    return detail::guarded_exp(-detail::block_action(Kx, v, m));
  };
  r.value = gaussian_expectation(f, k, o.q);
  double first = 0.0;
  for (Eigen::Index i = 0; i < Kx.rows(); ++i) {
    double s2 = Kx.row(i).squaredNorm();
    first += 0.75 * m.g * s2 * s2;
  }
  r.first_order = 1.0 - m.weight * first;
  const double B = std::pow(o.Lcal, o.d);
  const double x6 = std::pow(o.Lcal, 6);
  const double V = o.eps_hat * x6 + m.g * m.phibar * x6 * x6 * x6 + 0.25 * m.g * x6 * x6 * x6 * x6;
  r.shape = std::exp(3 * B * o.r_frak * (o.eps_hat + 12 * m.g * m.phibar * o.r_frak * o.r_frak)) * B * V;
  r.measured_const = r.shape > 0 ? std::abs(r.value - 1.0) / r.shape : 0.0;
  return r;
}

/** @brief B(box_x, box_y), its mirror B(box_y, box_x), and the Taylor identity check. */
struct TwoBlockReport {
  double value = 0.0;
  double partner = 0.0;
  double full = 0.0;
  double product = 0.0;
  double taylor_residual = 0.0;  ///< |full - product - value - partner|
  double measured_const = 0.0;   ///< |value| r / ||Gamma||_y
};

inline TwoBlockReport two_block_B(const BlockPairModel& m, const BlockOptions& o = {}) {
  if (m.g < 0) throw StabilityError("two_block_B: negative quartic coupling");
  const int k = m.k;
  if (2 * k > 8) throw CapacityError("two_block_B: more than 8 Gaussian coordinates");
  auto split = [&](const std::vector<double>& x) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), 2 * k);
    return std::pair<Eigen::VectorXd, Eigen::VectorXd>{v.head(k), v.tail(k)};
  };
  auto join = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd v(2 * k);
    v << a, b;
    return v;
  };
  // One Taylor term: derivative acting on the factor of `self`, partner block `other`.
  auto term = [&](bool y_side) {
    Rule S = gauss_legendre01(o.s_points);
    double acc = 0.0;
    for (std::size_t i = 0; i < S.nodes.size(); ++i) {
      double s = S.nodes[i];
      auto f = [&](const std::vector<double>& x) {
        auto [px, py] = split(x);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
        const Eigen::MatrixXd& Kd = y_side ? m.Ky : m.Kx;
        const Eigen::MatrixXd& Ko = y_side ? m.Kx : m.Ky;
        Eigen::VectorXd arg_o = y_side ? join(px, s * py) : join(s * px, py);
        Eigen::VectorXd arg_d = y_side ? join(s * px, py) : join(px, s * py);
        Eigen::VectorXd dir = y_side ? join(px, zero) : join(zero, py);
        Eigen::VectorXd a = Kd * arg_d, b = Kd * dir;
        double dv = 0.0;
        for (Eigen::Index r = 0; r < a.size(); ++r) dv += detail::dv_eps(a[r], m.eps, m.g, m.phibar) * b[r];
        double e = -detail::block_action(Ko, arg_o, m) - detail::block_action(Kd, arg_d, m);
        return -m.weight * dv * detail::guarded_exp(e);
      };
      acc += S.weights[i] * gaussian_expectation(f, 2 * k, o.q);
    }
    return acc;
  };
  TwoBlockReport r;
  r.value = term(true);
  r.partner = term(false);
  r.full = gaussian_expectation(
      [&](const std::vector<double>& x) {
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), 2 * k);
        return detail::guarded_exp(-detail::block_action(m.Kx, v, m) - detail::block_action(m.Ky, v, m));
      },
      2 * k, o.q);
  auto single = [&](bool y_side) {
    return gaussian_expectation(
        [&](const std::vector<double>& x) {
          Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), k);
          Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
          return y_side ? detail::guarded_exp(-detail::block_action(m.Ky, join(zero, v), m))
                        : detail::guarded_exp(-detail::block_action(m.Kx, join(v, zero), m));
        },
        k, o.q);
  };
  r.product = single(false) * single(true);
  r.taylor_residual = std::abs(r.full - r.product - r.value - r.partner);
  r.measured_const = o.gamma_y > 0 ? std::abs(r.value) * o.r_frak / o.gamma_y : 0.0;
  return r;
}

}  // namespace polygas
