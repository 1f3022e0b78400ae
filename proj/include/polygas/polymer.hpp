#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polygas/combinatorics.hpp"
#include "polygas/core.hpp"
#include "polygas/lattice.hpp"
#include "polygas/quadrature.hpp"

namespace polygas {

/// Subset of a small universe (sites, cubes or coarse blocks) as a bit mask.
using Mask = std::uint32_t;

inline std::vector<int> mask_members(Mask m) {
  std::vector<int> out;
  for (int i = 0; m; ++i, m >>= 1)
    if (m & 1u) out.push_back(i);
  return out;
}

inline Mask full_mask(int n) { return n >= 32 ? ~Mask{0} : (Mask{1} << n) - 1u; }

// ---------------------------------------------------------------------------
// Block-spin coordinates
// ---------------------------------------------------------------------------

/** @brief Per coarse block: dot[X][0] is the block mean, dot[X][k] = phi_{x_k} - mean for k > 0. */
struct BlockSpinCoords {
  std::vector<std::vector<double>> dot;
};

inline BlockSpinCoords blockspin_transform(const LatticeHierarchy& h, const std::vector<double>& phi) {
  if (phi.size() != h.block().volume()) throw DomainError("blockspin_transform: field not on Lambda");
  BlockSpinCoords c;
  c.dot.resize(h.coarse().volume());
  for (std::size_t X = 0; X < c.dot.size(); ++X) {
    const auto& s = h.coarse_sites(X);
    double mean = 0.0;
    for (auto v : s) mean += phi[v];
    mean /= static_cast<double>(s.size());
    auto& d = c.dot[X];
    d.resize(s.size());
    d[0] = mean;
    for (std::size_t k = 1; k < s.size(); ++k) d[k] = phi[s[k]] - mean;
  }
  return c;
}

inline std::vector<double> blockspin_inverse(const LatticeHierarchy& h, const BlockSpinCoords& c) {
  std::vector<double> phi(h.block().volume(), 0.0);
  for (std::size_t X = 0; X < c.dot.size(); ++X) {
    const auto& s = h.coarse_sites(X);
    const auto& d = c.dot[X];
    double rest = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
      phi[s[k]] = d[k] + d[0];
      rest += d[k];
    }
    phi[s[0]] = d[0] - rest;
  }
  return phi;
}

/// sum_X [B dot_1^2 + sum_k dot_k^2 + (sum_k dot_k)^2], which equals sum of phi^2 over the blocks.
inline double blockspin_l2(const BlockSpinCoords& c, const std::vector<std::size_t>& X) {
  double acc = 0.0;
  for (auto x : X) {
    const auto& d = c.dot[x];
    double sq = 0.0, sum = 0.0;
    for (std::size_t k = 1; k < d.size(); ++k) {
      sq += d[k] * d[k];
      sum += d[k];
    }
    acc += static_cast<double>(d.size()) * d[0] * d[0] + sq + sum * sum;
  }
  return acc;
}

/// ||phi||_X^2: the centered part weighted down by 1/B.
inline double blockspin_norm2(const BlockSpinCoords& c, const std::vector<std::size_t>& X) {
  double acc = 0.0;
  for (auto x : X) {
    const auto& d = c.dot[x];
    const double B = static_cast<double>(d.size());
    double sq = 0.0, sum = 0.0;
    for (std::size_t k = 1; k < d.size(); ++k) {
      sq += d[k] * d[k];
      sum += d[k];
    }
    acc += B * d[0] * d[0] + (sq + sum * sum) / B;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Scalar polymer gas and Mayer series
// ---------------------------------------------------------------------------

/** @brief Activities on subsets of sites 0..sites-1; missing subsets carry zero. */
struct ScalarPolymerGas {
  using cx = std::complex<double>;
  int sites = 0;
  std::map<Mask, cx> activity;

  cx at(Mask X) const {
    auto it = activity.find(X);
    return it == activity.end() ? cx(0.0) : it->second;
  }
  void set(Mask X, cx v) {
    if (X == 0) throw DomainError("polymer gas: empty polymer has no activity");
    if (X & ~full_mask(sites)) throw DomainError("polymer gas: polymer outside universe");
    activity[X] = v;
  }
};

/**
 * @brief Sum over partitions of `universe` of products of activities.
 *
 * Subset recursion Z(S) = sum_{T containing min S} a(T) Z(S \ T), O(3^|S|).
 */
template <class V, class Lookup>
V partition_sum_generic(Mask universe, const Lookup& act, V one, V zero) {
  if (std::popcount(universe) > 20) throw CapacityError("partition_sum: universe above 20 elements");
  std::map<Mask, V> memo;
  memo[0] = one;
  std::function<V(Mask)> Z = [&](Mask S) -> V {
    auto it = memo.find(S);
    if (it != memo.end()) return it->second;
    Mask low = S & (~S + 1u);
    Mask rest = S ^ low;
    V acc = zero;
    for (Mask sub = rest;; sub = (sub - 1) & rest) {
      Mask T = sub | low;
      auto a = act(T);
      if (a != zero) acc += a * Z(S ^ T);
      if (sub == 0) break;
    }
    memo[S] = acc;
    return acc;
  };
  return Z(universe);
}

inline std::complex<double> partition_sum(const ScalarPolymerGas& gas) {
  using cx = std::complex<double>;
  return partition_sum_generic<cx>(full_mask(gas.sites), [&](Mask T) { return gas.at(T); }, cx(1.0), cx(0.0));
}

/** @brief Mayer series value with its two tail bounds and the convergence hypothesis data. */
struct MayerReport {
  std::complex<double> log_z;
  std::complex<double> singles;
  std::vector<std::complex<double>> order_terms;  ///< order_terms[n-1] = n-th order contribution
  double norm = 0.0;        ///< sup_x sum_{X containing x, |X|>1} (2e)^{|X|-1} |A(X)|
  double min_single = 0.0;  ///< min_x |A({x})|
  double ratio = 0.0;       ///< norm / min_single
  double tail_series = 0.0; ///< |Upsilon| (1/2) sum_{n>N} r^n / n^2
  double tail_tree = std::numeric_limits<double>::infinity();
  double tail_bound = 0.0;  ///< min of the two
  std::size_t tuples = 0;
};

inline double mayer_norm(const ScalarPolymerGas& gas) {
  double best = 0.0;
  for (int x = 0; x < gas.sites; ++x) {
    double s = 0.0;
    for (const auto& [X, a] : gas.activity)
      if ((X >> x & 1u) && std::popcount(X) > 1) s += std::pow(2.0 * M_E, std::popcount(X) - 1) * std::abs(a);
    best = std::max(best, s);
  }
  return best;
}

/// |Upsilon| (1/2) sum_{n > N} r^n / n^2, summed until the terms drop below 1e-18 of the total.
inline double mayer_series_tail(double r, int N, int sites) {
  if (!(r < 1.0)) return std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (int n = N + 1; n < N + 100000; ++n) {
    double t = std::pow(r, n) / (static_cast<double>(n) * n);
    acc += t;
    if (t < 1e-18 * acc || t == 0.0) {
      acc += t * r / (1.0 - r);
      break;
    }
  }
  return 0.5 * sites * acc;
}

/**
 * @brief log Z = sum_x log A({x}) + sum_{n <= N} (1/n!) sum rho(X_1..X_n) prod A(X_m)/prod A({x}).
 *
 * Ordered tuples are enumerated as multisets weighted by 1/prod(multiplicity!).
 * Refuses (DivergenceError, stage "mayer") unless Re A({x}) > 1/2 and ||A|| < min |A({x})|.
 */
inline MayerReport mayer_log(const ScalarPolymerGas& gas, int truncation, std::size_t tuple_cap = 20000000) {
  using cx = std::complex<double>;
  if (truncation < 1) throw DomainError("mayer_log: truncation >= 1 required");
  if (truncation > 20) throw CapacityError("mayer_log: truncation above Ursell table cap");
  MayerReport rep;
  rep.min_single = std::numeric_limits<double>::infinity();
  double min_re = std::numeric_limits<double>::infinity();
  std::vector<cx> single(gas.sites);
  for (int x = 0; x < gas.sites; ++x) {
    single[x] = gas.at(Mask{1} << x);
    rep.min_single = std::min(rep.min_single, std::abs(single[x]));
    min_re = std::min(min_re, single[x].real());
  }
  rep.norm = mayer_norm(gas);
  rep.ratio = rep.norm / rep.min_single;
  if (!(min_re > 0.5)) throw DivergenceError("mayer_log: Re A({x}) <= 1/2, hypothesis fails", "mayer", min_re);
  if (!(rep.ratio < 1.0))
    throw DivergenceError("mayer_log: ||A|| >= min |A({x})|, series not certified", "mayer", rep.ratio);

  rep.singles = 0.0;
  for (auto a : single) rep.singles += std::log(a);

  struct Poly {
    Mask X;
    cx w;
  };
  std::vector<Poly> polys;
  double nu = 0.0;
  int xmax = 2;
  for (const auto& [X, a] : gas.activity) {
    if (std::popcount(X) < 2 || a == cx(0.0)) continue;
    cx den = 1.0;
    for (int x : mask_members(X)) den *= single[x];
    polys.push_back({X, a / den});
    xmax = std::max(xmax, std::popcount(X));
  }
  for (int x = 0; x < gas.sites; ++x) {
    double s = 0.0;
    for (const auto& p : polys)
      if (p.X >> x & 1u) s += std::abs(p.w);
    nu = std::max(nu, s);
  }

  rep.order_terms.assign(truncation, cx(0.0));
  std::vector<int> idx;
  std::function<void(int)> rec = [&](int start) {
    if (!idx.empty()) {
      const int n = static_cast<int>(idx.size());
      if (++rep.tuples > tuple_cap) throw CapacityError("mayer_log: tuple enumeration cap exceeded");
      LabeledGraph G;
      G.n = n;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (polys[idx[i]].X & polys[idx[j]].X) G.edges.emplace_back(i, j);
      std::int64_t rho = ursell_by_subsets(G);
      if (rho != 0) {
        cx w = static_cast<double>(rho);
        double mult = 1.0;
        int run = 1;
        for (int i = 0; i < n; ++i) {
          w *= polys[idx[i]].w;
          if (i > 0 && idx[i] == idx[i - 1]) mult *= ++run;
          else run = 1;
        }
        rep.order_terms[n - 1] += w / mult;
      }
    }
    if (static_cast<int>(idx.size()) == truncation) return;
    for (int p = start; p < static_cast<int>(polys.size()); ++p) {
      idx.push_back(p);
      rec(p);
      idx.pop_back();
    }
  };
  rec(0);

  rep.log_z = rep.singles;
  for (auto t : rep.order_terms) rep.log_z += t;
  rep.tail_series = mayer_series_tail(rep.ratio, truncation, gas.sites);
  // Tree bound with |X|^{d-1} <= xmax^{d-1} and n^{n-2}/n! <= e^n n^{-5/2} / sqrt(2 pi).
  double rho = M_E * xmax * nu / 2.0;
  if (polys.empty()) {
    rep.tail_tree = 0.0;
  } else if (rho < 1.0) {
    double C = gas.sites * 2.0 / (xmax * xmax * std::sqrt(2.0 * M_PI));
    rep.tail_tree = C * std::pow(truncation + 1.0, -2.5) * std::pow(rho, truncation + 1) / (1.0 - rho);
  }
  rep.tail_bound = std::min(rep.tail_series, rep.tail_tree);
  return rep;
}

// ---------------------------------------------------------------------------
// Exponential-quadratic toy activities with exact directional derivatives
// ---------------------------------------------------------------------------

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

/** @brief c exp(a.psi + psi.Q psi / 2) on a field of fixed dimension. */
struct ExpQuad {
  double c = 1.0;
  SmallVec a;
  SmallMat Q;

  static ExpQuad constant(int dim, double c) {
    ExpQuad e;
    e.c = c;
    e.a = SmallVec::Zero(dim);
    e.Q = SmallMat::Zero(dim, dim);
    return e;
  }

  double exponent(const SmallVec& psi) const { return a.dot(psi) + 0.5 * psi.dot(Q * psi); }
  double value(const SmallVec& psi) const { return c * std::exp(exponent(psi)); }

  /**
   * @brief D^{v_1..v_k} of the activity at psi.
   *
   * f(S) = grad_i f(S\i) + sum_j Q_ij f(S\{i,j}) with i = min S: each term is a
   * partial pairing of the directions.
   */
  double derivative(const SmallVec& psi, const std::vector<SmallVec>& dirs) const {
    const int k = static_cast<int>(dirs.size());
    if (k == 0) return value(psi);
    if (k > 8) throw CapacityError("ExpQuad::derivative: order above 8");
    SmallVec grad = a + Q * psi;
    double gi[8], hij[8][8];
    for (int i = 0; i < k; ++i) {
      gi[i] = grad.dot(dirs[i]);
      SmallVec Qv = Q * dirs[i];
      for (int j = 0; j < k; ++j) hij[j][i] = dirs[j].dot(Qv);
    }
    std::vector<double> f(std::size_t{1} << k, 0.0);
    f[0] = 1.0;
    for (Mask S = 1; S < (Mask{1} << k); ++S) {
      int i = std::countr_zero(S);
      Mask R = S ^ (Mask{1} << i);
      double acc = gi[i] * f[R];
      for (Mask T = R; T; T &= T - 1) {
        int j = std::countr_zero(T);
        acc += hij[i][j] * f[R ^ (Mask{1} << j)];
      }
      f[S] = acc;
    }
    return value(psi) * f.back();
  }

  ExpQuad operator*(const ExpQuad& o) const { return ExpQuad{c * o.c, a + o.a, Q + o.Q}; }

  /// E[c exp(a.(M phi) + (M phi).Q(M phi)/2)] for phi ~ N(0, I).
  double gaussian_mean(const Eigen::MatrixXd& M) const {
    Eigen::MatrixXd Mq = M.transpose() * Eigen::MatrixXd(Q) * M;
    Eigen::VectorXd b = M.transpose() * Eigen::VectorXd(a);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(M.cols(), M.cols()) - Mq;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw StabilityError("ExpQuad::gaussian_mean: not integrable");
    double logdet = 0.0;
    Eigen::MatrixXd Lm = llt.matrixL();
    for (int i = 0; i < Lm.rows(); ++i) logdet += 2.0 * std::log(Lm(i, i));
    return c * std::exp(-0.5 * logdet + 0.5 * b.dot(llt.solve(b)));
  }
};

/** @brief Finite sum of ExpQuad terms supported on the sites of `support`. */
struct GaussianActivity {
  Mask support = 0;
  std::vector<ExpQuad> terms;

  bool empty() const { return terms.empty(); }
  double value(const SmallVec& psi) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.value(psi);
    return s;
  }
  double derivative(const SmallVec& psi, const std::vector<SmallVec>& dirs) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.derivative(psi, dirs);
    return s;
  }
  double gaussian_mean(const Eigen::MatrixXd& M) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.gaussian_mean(M);
    return s;
  }
  bool operator!=(const GaussianActivity& o) const { return support != o.support || terms.size() != o.terms.size(); }
  GaussianActivity& operator+=(const GaussianActivity& o) {
    support |= o.support;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  GaussianActivity operator*(const GaussianActivity& o) const {
    GaussianActivity r;
    r.support = support | o.support;
    r.terms.reserve(terms.size() * o.terms.size());
    for (const auto& a : terms)
      for (const auto& b : o.terms) r.terms.push_back(a * b);
    return r;
  }
};

// ---------------------------------------------------------------------------
// Reblocking
// ---------------------------------------------------------------------------

/// Coarse block of every paving cube; throws if a cube straddles coarse blocks.
inline std::vector<int> cube_coarse_map(const LatticeHierarchy& h) {
  std::vector<int> out(h.paving().volume());
  for (std::size_t b = 0; b < out.size(); ++b) {
    const auto& s = h.cube_sites(b);
    std::size_t X = h.coarse_of(s.front());
    for (auto v : s)
      if (h.coarse_of(v) != X) throw ConfigError("cube_coarse_map: paving cube not nested in a coarse block");
    out[b] = static_cast<int>(X);
  }
  return out;
}

/**
 * @brief Coarse activities g(X) = sum over partitions of the units of X whose footprint graph is connected.
 *
 * Two parts are adjacent when some coarse block meets both. `unit_coarse[u]` is the coarse
 * block of fine unit u; result keys are coarse-block masks.
 */
template <class V>
std::map<Mask, V> reblock(const std::map<Mask, V>& fine, const std::vector<int>& unit_coarse, int n_coarse,
                          std::size_t partition_cap = 5000000) {
  const int units = static_cast<int>(unit_coarse.size());
  if (units > 24) throw CapacityError("reblock: more than 24 fine units");
  if (n_coarse > 16) throw CapacityError("reblock: more than 16 coarse blocks");
  auto footprint = [&](Mask Y) {
    Mask f = 0;
    for (int u : mask_members(Y)) f |= Mask{1} << unit_coarse[u];
    return f;
  };
  std::vector<std::pair<Mask, const V*>> parts;
  for (const auto& [Y, v] : fine) {
    if (Y & ~full_mask(units)) throw DomainError("reblock: polymer outside the fine universe");
    parts.push_back({Y, &v});
  }
  std::map<Mask, V> out;
  std::size_t visited = 0;
  for (Mask X = 1; X <= full_mask(n_coarse); ++X) {
    Mask U = 0;
    for (int u = 0; u < units; ++u)
      if (X >> unit_coarse[u] & 1u) U |= Mask{1} << u;
    if (U == 0) continue;
    std::optional<V> acc;
    std::vector<int> chosen;
    std::function<void(Mask, std::optional<V>)> rec = [&](Mask left, std::optional<V> prod) {
      if (left == 0) {
        // connectivity of the footprint graph
        const int m = static_cast<int>(chosen.size());
        std::vector<Mask> fp(m);
        for (int i = 0; i < m; ++i) fp[i] = footprint(parts[chosen[i]].first);
        std::uint32_t reached = 1u, frontier = 1u;
        while (frontier) {
          std::uint32_t next = 0;
          for (int i = 0; i < m; ++i)
            if (frontier >> i & 1u)
              for (int j = 0; j < m; ++j)
                if (!(reached >> j & 1u) && (fp[i] & fp[j])) next |= 1u << j;
          reached |= next;
          frontier = next;
        }
        if (reached == full_mask(m)) {
          if (acc) *acc += *prod;
          else acc = *prod;
        }
        return;
      }
      if (++visited > partition_cap) throw CapacityError("reblock: partition enumeration cap exceeded");
      Mask low = left & (~left + 1u);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        Mask Y = parts[i].first;
        if (!(Y & low) || (Y & ~left)) continue;
        chosen.push_back(static_cast<int>(i));
        rec(left ^ Y, prod ? std::optional<V>(*prod * *parts[i].second) : std::optional<V>(*parts[i].second));
        chosen.pop_back();
      }
    };
    rec(U, std::nullopt);
    if (acc) out.emplace(X, *acc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// BKAR localization
// ---------------------------------------------------------------------------

/** @brief Coarse gas of Gaussian activities over sites grouped into coarse blocks, psi = Gamma phi. */
struct LocalizationInstance {
  int n_coarse = 0;
  std::vector<int> site_block;
  Eigen::MatrixXd Gamma;
  std::map<Mask, GaussianActivity> coarse;

  int dim() const { return static_cast<int>(site_block.size()); }
  Mask sites_of(Mask X) const {
    Mask s = 0;
    for (int i = 0; i < dim(); ++i)
      if (X >> site_block[i] & 1u) s |= Mask{1} << i;
    return s;
  }
  /// P_a Gamma P_b phi as a field on all sites.
  SmallVec restricted_apply(Mask rows, Mask cols, const SmallVec& phi) const {
    SmallVec out = SmallVec::Zero(dim());
    for (int i = 0; i < dim(); ++i) {
      if (!(rows >> i & 1u)) continue;
      for (int j = 0; j < dim(); ++j)
        if (cols >> j & 1u) out[i] += Gamma(i, j) * phi[j];
    }
    return out;
  }
};

/**
 * @brief Path minima of the edge parameters on a tree; s[m][m] = 1.
 */
inline std::vector<std::vector<double>> tree_interpolation(int n, const std::vector<std::pair<int, int>>& edges,
                                                           const std::vector<double>& t) {
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].first].push_back({edges[e].second, t[e]});
    adj[edges[e].second].push_back({edges[e].first, t[e]});
  }
  std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
  for (int r = 0; r < n; ++r) {
    s[r][r] = 1.0;
    std::vector<int> stack{r};
    std::vector<char> seen(n, 0);
    seen[r] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (auto [v, w] : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          s[r][v] = std::min(s[r][u], w);
          stack.push_back(v);
        }
    }
  }
  return s;
}

/**
 * @brief A(X; phi) = sum over partitions {X_m} of X and d-trees T of int ds prod_m D_m g(X_m; psi_m(s)).
 *
 * psi_m(s) = sum_{m'} s_{mm'} P_m Gamma P_{m'} phi; an edge (m, m') of T contributes the
 * direction P_m Gamma P_{m'} phi to the derivative acting on g(X_m).
 */
inline double localized_activity(const LocalizationInstance& inst, Mask X, const SmallVec& phi, int q = 8) {
  std::vector<int> blocks = mask_members(X);
  const int nb = static_cast<int>(blocks.size());
  double total = 0.0;
  for_each_partition(nb, [&](const SetPartition& P) {
    const int n = static_cast<int>(P.blocks.size());
    std::vector<Mask> parts(n);
    std::vector<const GaussianActivity*> acts(n);
    for (int m = 0; m < n; ++m) {
      for (int b : P.blocks[m]) parts[m] |= Mask{1} << blocks[b];
      auto it = inst.coarse.find(parts[m]);
      if (it == inst.coarse.end()) return;
      acts[m] = &it->second;
    }
    std::vector<Mask> sites(n);
    for (int m = 0; m < n; ++m) sites[m] = inst.sites_of(parts[m]);
    if (n == 1) {
      total += acts[0]->value(inst.restricted_apply(sites[0], sites[0], phi));
      return;
    }
    // cross[m][m'] = P_m Gamma P_{m'} phi
    std::vector<std::vector<SmallVec>> cross(n, std::vector<SmallVec>(n));
    for (int m = 0; m < n; ++m)
      for (int mp = 0; mp < n; ++mp) cross[m][mp] = inst.restricted_apply(sites[m], sites[mp], phi);
    std::vector<int> seq(n - 2, 0);
    const std::int64_t trees = ipow(n, n - 2);
    for (std::int64_t tr = 0; tr < trees; ++tr) {
      std::int64_t r = tr;
      for (int i = 0; i < n - 2; ++i) {
        seq[i] = static_cast<int>(r % n);
        r /= n;
      }
      auto edges = pruefer_decode(seq, n);
      auto integrand = [&](const std::vector<double>& t) {
        auto s = tree_interpolation(n, edges, t);
        std::vector<SmallVec> psi(n);
        for (int m = 0; m < n; ++m) {
          psi[m] = SmallVec::Zero(inst.dim());
          for (int mp = 0; mp < n; ++mp) psi[m] += s[m][mp] * cross[m][mp];
        }
        double acc = 0.0;
        for (Mask orient = 0; orient < (Mask{1} << (n - 1)); ++orient) {
          std::vector<std::vector<SmallVec>> dirs(n);
          for (int e = 0; e < n - 1; ++e) {
            auto [u, v] = edges[e];
            if (orient >> e & 1u) std::swap(u, v);
            dirs[u].push_back(cross[u][v]);
          }
          double prod = 1.0;
          for (int m = 0; m < n && prod != 0.0; ++m) prod *= acts[m]->derivative(psi[m], dirs[m]);
          acc += prod;
        }
        return acc;
      };
      total += ordered_cube_integral(integrand, n - 1, q);
    }
  });
  return total;
}

// ---------------------------------------------------------------------------
// Gaussian integration of activities
// ---------------------------------------------------------------------------

/** @brief Value of an integral over the standard Gaussian with an error estimate. */
struct IntegrationReport {
  double value = 0.0;
  double error = 0.0;  ///< |Q(q) - Q(q-2)| for tensor rules, standard error for Monte Carlo
  std::string method;
  int dim = 0;
};

/// Tensor Gauss-Hermite integral of A over N(0, I_dim); error from the q-2 rule.
inline IntegrationReport integrate_activity(const std::function<double(const SmallVec&)>& A, int dim, int q = 12,
                                            int max_dim = 8) {
  if (dim > max_dim) throw CapacityError("integrate_activity: dimension above tensor quadrature cap");
  auto f = [&](const std::vector<double>& x) {
    SmallVec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = x[i];
    return A(v);
  };
  IntegrationReport r;
  r.dim = dim;
  r.method = "gauss-hermite";
  r.value = gaussian_expectation(f, dim, q, max_dim);
  if (q > 2) r.error = std::abs(r.value - gaussian_expectation(f, dim, q - 2, max_dim));
  return r;
}

/// Monte Carlo fallback; error is the standard error of the mean.
inline IntegrationReport integrate_activity_mc(const std::function<double(const SmallVec&)>& A, int dim,
                                               std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw DomainError("integrate_activity_mc: at least two samples required");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  double mean = 0.0, m2 = 0.0;
  SmallVec v(dim);
  for (std::size_t s = 0; s < samples; ++s) {
    for (int i = 0; i < dim; ++i) v[i] = N01(rng);
    double x = A(v);
    double d = x - mean;
    mean += d / static_cast<double>(s + 1);
    m2 += d * (x - mean);
  }
  IntegrationReport r;
  r.dim = dim;
  r.method = "monte-carlo";
  r.value = mean;
  r.error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  return r;
}

// ---------------------------------------------------------------------------
// Cluster expansion check
// ---------------------------------------------------------------------------

/** @brief Fine polymers on sites grouped into coarse blocks, with psi = Gamma phi. */
struct ClusterInstance {
  std::string name;
  int n_coarse = 0;
  std::vector<int> site_block;
  Eigen::MatrixXd Gamma;
  std::map<Mask, GaussianActivity> fine;

  int dim() const { return static_cast<int>(site_block.size()); }
};

/// Random instance: every single site and every pair of sites carries an ExpQuad activity.
inline ClusterInstance make_cluster_instance(int n_coarse, int sites_per_block, double coupling,
                                             std::uint64_t seed, double pair_scale = 0.1) {
  const int D = n_coarse * sites_per_block;
  if (D > 8) throw CapacityError("make_cluster_instance: more than 8 sites");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ClusterInstance c;
  c.n_coarse = n_coarse;
  for (int b = 0; b < n_coarse; ++b)
    for (int k = 0; k < sites_per_block; ++k) c.site_block.push_back(b);
  Eigen::MatrixXd R(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) R(i, j) = U(rng);
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      if (c.site_block[i] == c.site_block[j] && i != j) G(i, j) = 0.2 * (R(i, j) + R(j, i)) / 2.0;
      else if (c.site_block[i] != c.site_block[j]) G(i, j) = coupling * (R(i, j) + R(j, i)) / 2.0;
  c.Gamma = G;
  auto make = [&](Mask X, double cscale) {
    ExpQuad e = ExpQuad::constant(D, 1.0);
    e.c = cscale * (1.0 + 0.2 * U(rng));
    for (int i : mask_members(X)) {
      e.a[i] = 0.2 * U(rng);
      e.Q(i, i) = -0.1 - 0.1 * std::abs(U(rng));
    }
    auto m = mask_members(X);
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j) e.Q(m[i], m[j]) = e.Q(m[j], m[i]) = 0.03 * U(rng);
    GaussianActivity a;
    a.support = X;
    a.terms.push_back(e);
    return a;
  };
  for (int i = 0; i < D; ++i) c.fine[Mask{1} << i] = make(Mask{1} << i, 1.0);
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) c.fine[(Mask{1} << i) | (Mask{1} << j)] = make((Mask{1} << i) | (Mask{1} << j), pair_scale);
  return c;
}

/// Instances named by the CLI: decoupled, twoblock, threeblock, random:<seed>.
inline ClusterInstance named_cluster_instance(const std::string& name) {
  ClusterInstance c;
  if (name == "decoupled") {
    c = make_cluster_instance(2, 2, 0.0, 11);
  } else if (name == "twoblock") {
    c = make_cluster_instance(2, 2, 0.1, 12);
  } else if (name == "threeblock") {
    c = make_cluster_instance(3, 2, 0.1, 13);
  } else if (name.rfind("random:", 0) == 0) {
    std::uint64_t seed = std::stoull(name.substr(7));
    c = make_cluster_instance(2, 2, 0.15, seed);
  } else {
    throw ConfigError("unknown expansion instance '" + name + "'");
  }
  c.name = name;
  return c;
}

/** @brief Both sides of Z = sum over partitions of the coarse lattice of prod A(X_m). */
struct ClusterReport {
  double lhs = 0.0;          ///< direct quadrature or Monte Carlo of the full integrand
  double lhs_error = 0.0;
  std::string lhs_method;
  double closed_form = 0.0;  ///< exact Gaussian integral of the expanded partition sum
  double rhs = 0.0;          ///< reblock -> localize -> integrate -> partition sum
  double rhs_error = 0.0;
  double rel_error = 0.0;       ///< |rhs - lhs| / |lhs|
  double rel_error_exact = 0.0; ///< |rhs - closed_form| / |closed_form|
  double z_score = 0.0;         ///< |rhs - lhs| / lhs_error for Monte Carlo
  double reblock_residual = 0.0;
  std::map<Mask, double> coarse_integrals;
};

struct ClusterOptions {
  int gh_points = 14;       ///< Gauss-Hermite points per axis for the direct side
  int rhs_gh_points = 10;   ///< points per axis for each A(X) integral
  int rhs_gh_points_high = 6;  ///< points per axis when A(X) lives in more than 4 dimensions
  int s_points = 8;         ///< Gauss-Legendre points per interpolation axis
  int max_tensor_dim = 4;   ///< beyond this the direct side uses Monte Carlo
  std::size_t mc_samples = 2000000;
  std::uint64_t seed = 2024;
};

inline ClusterReport cluster_identity_check(const ClusterInstance& inst, const ClusterOptions& opt = {}) {
  const int D = inst.dim();
  if (inst.n_coarse > 3) throw CapacityError("cluster_identity_check: at most 3 coarse blocks");
  ClusterReport rep;
  const Mask all = full_mask(D);

  auto direct = [&](const SmallVec& phi) {
    SmallVec psi = inst.Gamma * Eigen::VectorXd(phi);
    return partition_sum_generic<double>(all,
                                         [&](Mask T) {
                                           auto it = inst.fine.find(T);
                                           return it == inst.fine.end() ? 0.0 : it->second.value(psi);
                                         },
                                         1.0, 0.0);
  };
  IntegrationReport L = D <= opt.max_tensor_dim ? integrate_activity(direct, D, opt.gh_points)
                                                : integrate_activity_mc(direct, D, opt.mc_samples, opt.seed);
  rep.lhs = L.value;
  rep.lhs_error = L.error;
  rep.lhs_method = L.method;

  // Closed form: expand the partition sum into ExpQuad terms.
  GaussianActivity expanded = partition_sum_generic<GaussianActivity>(
      all,
      [&](Mask T) {
        auto it = inst.fine.find(T);
        return it == inst.fine.end() ? GaussianActivity{} : it->second;
      },
      GaussianActivity{0, {ExpQuad::constant(D, 1.0)}}, GaussianActivity{});
  rep.closed_form = expanded.gaussian_mean(inst.Gamma);

  std::vector<int> unit_coarse = inst.site_block;
  auto coarse = reblock(inst.fine, unit_coarse, inst.n_coarse);
  {
    // reblocking conserves the partition sum at a fixed field
    SmallVec psi(D);
    for (int i = 0; i < D; ++i) psi[i] = 0.3 * std::sin(1.0 + i);
    double fine_sum = partition_sum_generic<double>(
        all, [&](Mask T) { auto it = inst.fine.find(T); return it == inst.fine.end() ? 0.0 : it->second.value(psi); },
        1.0, 0.0);
    double coarse_sum = partition_sum_generic<double>(
        full_mask(inst.n_coarse),
        [&](Mask T) { auto it = coarse.find(T); return it == coarse.end() ? 0.0 : it->second.value(psi); }, 1.0,
        0.0);
    rep.reblock_residual = std::abs(fine_sum - coarse_sum) / std::abs(fine_sum);
  }

  LocalizationInstance li{inst.n_coarse, inst.site_block, inst.Gamma, coarse};
  double err2 = 0.0;
  for (Mask X = 1; X <= full_mask(inst.n_coarse); ++X) {
    Mask S = li.sites_of(X);
    std::vector<int> idx = mask_members(S);
    auto A = [&](const SmallVec& local) {
      SmallVec phi = SmallVec::Zero(D);
      for (std::size_t i = 0; i < idx.size(); ++i) phi[idx[i]] = local[i];
      return localized_activity(li, X, phi, opt.s_points);
    };
    const int dim = static_cast<int>(idx.size());
    auto I = integrate_activity(A, dim, dim > 4 ? opt.rhs_gh_points_high : opt.rhs_gh_points);
    rep.coarse_integrals[X] = I.value;
    err2 += I.error * I.error;
  }
  rep.rhs = partition_sum_generic<double>(
      full_mask(inst.n_coarse),
      [&](Mask T) { auto it = rep.coarse_integrals.find(T); return it == rep.coarse_integrals.end() ? 0.0 : it->second; },
      1.0, 0.0);
  rep.rhs_error = std::sqrt(err2);
  rep.rel_error = std::abs(rep.rhs - rep.lhs) / std::abs(rep.lhs);
  rep.rel_error_exact = std::abs(rep.rhs - rep.closed_form) / std::abs(rep.closed_form);
  rep.z_score = rep.lhs_error > 0 ? std::abs(rep.rhs - rep.lhs) / rep.lhs_error : 0.0;
  return rep;
}

}  // namespace polygas
