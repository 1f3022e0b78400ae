#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "polygas/core.hpp"
#include "polygas/lattice.hpp"
#include "polygas/quadrature.hpp"

namespace polygas {

/** @brief Simple undirected graph on vertices 0..n-1. */
struct LabeledGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  std::vector<std::uint32_t> adjacency() const {
    std::vector<std::uint32_t> adj(n, 0);
    for (auto [a, b] : edges) {
      adj[a] |= 1u << b;
      adj[b] |= 1u << a;
    }
    return adj;
  }

  static LabeledGraph from_matrix(const std::vector<std::vector<int>>& m) {
    LabeledGraph g;
    g.n = static_cast<int>(m.size());
    for (int i = 0; i < g.n; ++i) {
      if (static_cast<int>(m[i].size()) != g.n) throw DomainError("overlap matrix must be square");
      for (int j = i + 1; j < g.n; ++j) {
        if ((m[i][j] != 0) != (m[j][i] != 0)) throw DomainError("overlap matrix must be symmetric");
        if (m[i][j]) g.edges.emplace_back(i, j);
      }
    }
    return g;
  }

  static LabeledGraph complete(int n) {
    LabeledGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
    return g;
  }
};

/** @brief Tree with oriented edges (from, to). */
struct DTree {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

/** @brief Partition of 0..n-1 into nonempty blocks. */
struct SetPartition {
  std::vector<std::vector<int>> blocks;
};

/// True when the edges selected by `edge_mask` connect all n vertices.
inline bool spans_connected(int n, const std::vector<std::pair<int, int>>& edges, std::uint64_t edge_mask) {
  std::uint32_t reached = 1u;
  bool grew = true;
  while (grew) {
    grew = false;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!(edge_mask >> e & 1u)) continue;
      std::uint32_t a = 1u << edges[e].first, b = 1u << edges[e].second;
      if (((reached & a) != 0) != ((reached & b) != 0)) {
        reached |= a | b;
        grew = true;
      }
    }
  }
  return reached == (n >= 32 ? ~0u : (1u << n) - 1u);
}

/**
 * @brief Ursell function by enumeration of connected spanning subgraphs.
 *
 * Only edges of the overlap graph carry a nonzero factor (-1), so the sum runs
 * over subsets of those edges.
 */
inline std::int64_t ursell(const LabeledGraph& overlap, int cap = 8) {
  if (overlap.n < 1) throw DomainError("ursell: n >= 1 required");
  if (overlap.n > cap) throw CapacityError("ursell: n above enumeration cap");
  if (overlap.n == 1) return 1;
  const std::size_t m = overlap.edges.size();
  std::int64_t total = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    if (static_cast<int>(std::popcount(mask)) < overlap.n - 1) continue;
    if (spans_connected(overlap.n, overlap.edges, mask)) total += (std::popcount(mask) % 2) ? -1 : 1;
  }
  return total;
}

/**
 * @brief Connected-part recursion over vertex subsets, O(3^n).
 *
 * f(S) = [H[S] has no edge] equals the sum over all graphs on S, and
 * f(S) = sum_{T containing min S} c(T) f(S \ T) isolates the connected sum c.
 */
inline std::vector<std::int64_t> ursell_table(const LabeledGraph& overlap, int cap = 20) {
  const int n = overlap.n;
  if (n > cap) throw CapacityError("ursell_table: n above cap");
  auto adj = overlap.adjacency();
  const std::uint32_t full = (1u << n) - 1u;
  std::vector<std::int64_t> f(full + 1), c(full + 1, 0);
  for (std::uint32_t S = 0; S <= full; ++S) {
    bool independent = true;
    for (int v = 0; v < n && independent; ++v)
      if ((S >> v & 1u) && (adj[v] & S)) independent = false;
    f[S] = independent ? 1 : 0;
  }
  for (std::uint32_t S = 1; S <= full; ++S) {
    std::uint32_t low = S & (~S + 1u);
    std::uint32_t rest = S ^ low;
    std::int64_t acc = f[S];
    for (std::uint32_t sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
      std::uint32_t T = sub | low;
      if (T != S) acc -= c[T] * f[S ^ T];
      if (sub == 0) break;
    }
    c[S] = acc;
  }
  return c;
}

inline std::int64_t ursell_by_subsets(const LabeledGraph& overlap) {
  if (overlap.n < 1) throw DomainError("ursell: n >= 1 required");
  return ursell_table(overlap)[(1u << overlap.n) - 1u];
}

/// Number of spanning trees by the matrix-tree theorem with fraction-free (Bareiss) elimination.
inline std::int64_t spanning_tree_count(const LabeledGraph& g) {
  const int n = g.n;
  if (n <= 1) return 1;
  std::vector<std::vector<__int128>> M(n - 1, std::vector<__int128>(n - 1, 0));
  for (auto [a, b] : g.edges) {
    if (a < n - 1) M[a][a] += 1;
    if (b < n - 1) M[b][b] += 1;
    if (a < n - 1 && b < n - 1) {
      M[a][b] -= 1;
      M[b][a] -= 1;
    }
  }
  const int k = n - 1;
  __int128 prev = 1;
  int sign = 1;
  for (int i = 0; i < k; ++i) {
    if (M[i][i] == 0) {
      int r = i + 1;
      while (r < k && M[r][i] == 0) ++r;
      if (r == k) return 0;
      std::swap(M[i], M[r]);
      sign = -sign;
    }
    for (int r = i + 1; r < k; ++r) {
      for (int c = i + 1; c < k; ++c) M[r][c] = (M[r][c] * M[i][i] - M[r][i] * M[i][c]) / prev;
      M[r][i] = 0;
    }
    prev = M[i][i];
  }
  return static_cast<std::int64_t>(sign * M[k - 1][k - 1]);
}

/** @brief |rho| against the spanning-tree count of the overlap graph. */
struct TreeBoundReport {
  std::int64_t abs_ursell = 0;
  std::int64_t tree_sum = 0;
  bool holds = false;
};

inline TreeBoundReport ursell_tree_bound(const LabeledGraph& overlap, int cap = 8) {
  TreeBoundReport r;
  r.abs_ursell = std::abs(ursell(overlap, cap));
  r.tree_sum = spanning_tree_count(overlap);
  r.holds = r.abs_ursell <= r.tree_sum;
  return r;
}

inline std::int64_t factorial(int k) {
  std::int64_t r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

/// Decodes a Pruefer sequence into the edge list of a labelled tree on 0..n-1.
inline std::vector<std::pair<int, int>> pruefer_decode(const std::vector<int>& seq, int n) {
  std::vector<int> degree(n, 1);
  for (int v : seq) ++degree[v];
  std::vector<std::pair<int, int>> edges;
  std::set<int> leaves;
  for (int v = 0; v < n; ++v)
    if (degree[v] == 1) leaves.insert(v);
  for (int v : seq) {
    int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(leaf, v);
    if (--degree[v] == 1) leaves.insert(v);
  }
  int a = *leaves.begin();
  int b = *std::next(leaves.begin());
  edges.emplace_back(a, b);
  return edges;
}

/// Calls visit(tree) for every d-tree on n vertices.
inline void for_each_dtree(int n, const std::function<void(const DTree&)>& visit) {
  if (n == 1) {
    visit(DTree{1, {}});
    return;
  }
  std::vector<int> seq(n - 2, 0);
  const std::int64_t trees = ipow(n, n - 2);
  for (std::int64_t t = 0; t < trees; ++t) {
    std::int64_t r = t;
    for (int i = 0; i < n - 2; ++i) {
      seq[i] = static_cast<int>(r % n);
      r /= n;
    }
    auto edges = pruefer_decode(seq, n);
    for (std::uint32_t orient = 0; orient < (1u << (n - 1)); ++orient) {
      DTree T{n, edges};
      for (int e = 0; e < n - 1; ++e)
        if (orient >> e & 1u) std::swap(T.edges[e].first, T.edges[e].second);
      visit(T);
    }
  }
}

/** @brief Exhaustive sum over d-trees of the product of vertex-degree factorials. */
struct DTreeReport {
  int n = 0;
  std::int64_t count = 0;
  std::int64_t lhs = 0;
  std::int64_t rhs = 0;
  bool holds = false;
};

inline DTreeReport dtree_factorial_sum(int n, int cap = 7) {
  if (n < 2) throw DomainError("dtree_factorial_sum: n >= 2 required");
  if (n > cap) throw CapacityError("dtree_factorial_sum: n above enumeration cap");
  DTreeReport r;
  r.n = n;
  std::vector<int> deg(n);
  for_each_dtree(n, [&](const DTree& T) {
    std::fill(deg.begin(), deg.end(), 0);
    for (auto [a, b] : T.edges) {
      ++deg[a];
      ++deg[b];
    }
    std::int64_t p = 1;
    for (int v : deg) p *= factorial(v);
    r.lhs += p;
    ++r.count;
  });
  r.rhs = factorial(n - 2) * ipow(2, 4 * (n - 1));
  r.holds = r.lhs <= r.rhs;
  return r;
}

/// Number of labelled trees with the given vertex degrees, (n-2)! / prod (d_m - 1)!.
inline std::int64_t cayley_count(const std::vector<int>& degrees) {
  const int n = static_cast<int>(degrees.size());
  if (n < 2) throw DomainError("cayley_count: n >= 2 required");
  int sum = 0;
  for (int d : degrees) {
    if (d < 1) throw DomainError("cayley_count: degrees must be >= 1");
    sum += d;
  }
  if (sum != 2 * (n - 1)) throw DomainError("cayley_count: degree sum must equal 2(n-1)");
  std::int64_t r = factorial(n - 2);
  for (int d : degrees) r /= factorial(d - 1);
  return r;
}

/// Sum of cayley_count over all admissible degree sequences.
inline std::int64_t cayley_total(int n) {
  if (n < 2) throw DomainError("cayley_total: n >= 2 required");
  std::vector<int> deg(n, 1);
  std::int64_t total = 0;
  std::function<void(int, int)> rec = [&](int v, int remaining) {
    if (v == n - 1) {
      deg[v] = 1 + remaining;
      total += cayley_count(deg);
      return;
    }
    for (int extra = 0; extra <= remaining; ++extra) {
      deg[v] = 1 + extra;
      rec(v + 1, remaining - extra);
    }
  };
  rec(0, n - 2);
  return total;
}

/** @brief Smooth function of the edge parameters s_e of K_n with mixed first derivatives. */
class EdgeFunction {
 public:
  virtual ~EdgeFunction() = default;
  /// Mixed partial derivative in the edges of `mask` (each at most once), at s.
  virtual double derivative(const std::vector<double>& s, std::uint64_t mask) const = 0;
  double value(const std::vector<double>& s) const { return derivative(s, 0); }
};

/** @brief f(s) = prod_e phi_e(s_e), each factor given with its first derivative. */
class ProductEdgeFunction : public EdgeFunction {
 public:
  using Factor = std::function<std::pair<double, double>(double)>;
  explicit ProductEdgeFunction(std::vector<Factor> factors) : factors_(std::move(factors)) {}

  double derivative(const std::vector<double>& s, std::uint64_t mask) const override {
    double p = 1.0;
    for (std::size_t e = 0; e < factors_.size(); ++e) {
      auto [v, dv] = factors_[e](s[e]);
      p *= (mask >> e & 1u) ? dv : v;
    }
    return p;
  }

 private:
  std::vector<Factor> factors_;
};

/** @brief f(s) = sum_S c_S prod_{e in S} s_e. */
class MultilinearEdgeFunction : public EdgeFunction {
 public:
  explicit MultilinearEdgeFunction(std::vector<std::pair<std::uint64_t, double>> terms)
      : terms_(std::move(terms)) {}

  double derivative(const std::vector<double>& s, std::uint64_t mask) const override {
    double acc = 0.0;
    for (auto [S, c] : terms_) {
      if ((S & mask) != mask) continue;
      double p = c;
      std::uint64_t rest = S & ~mask;
      for (std::size_t e = 0; rest; ++e, rest >>= 1)
        if (rest & 1u) p *= s[e];
      acc += p;
    }
    return acc;
  }

 private:
  std::vector<std::pair<std::uint64_t, double>> terms_;
};

/** @brief Mixed partials of an arbitrary function by central differences. */
class FiniteDifferenceEdgeFunction : public EdgeFunction {
 public:
  FiniteDifferenceEdgeFunction(std::function<double(const std::vector<double>&)> f, double step = 1e-3)
      : f_(std::move(f)), h_(step) {}

  double derivative(const std::vector<double>& s, std::uint64_t mask) const override {
    std::vector<int> dirs;
    for (std::size_t e = 0; e < 64; ++e)
      if (mask >> e & 1u) dirs.push_back(static_cast<int>(e));
    const int k = static_cast<int>(dirs.size());
    double acc = 0.0;
    std::vector<double> x = s;
    for (std::uint32_t sg = 0; sg < (1u << k); ++sg) {
      int neg = 0;
      for (int i = 0; i < k; ++i) {
        bool minus = sg >> i & 1u;
        neg += minus;
        x[dirs[i]] = s[dirs[i]] + (minus ? -h_ : h_);
      }
      acc += (neg % 2 ? -1.0 : 1.0) * f_(x);
    }
    return acc / std::pow(2.0 * h_, k);
  }

 private:
  std::function<double(const std::vector<double>&)> f_;
  double h_;
};

/// Edge list of K_n in lexicographic order; s vectors are indexed by it.
inline std::vector<std::pair<int, int>> complete_edges(int n) { return LabeledGraph::complete(n).edges; }

/**
 * @brief Interpolated parameters s^F(i,j): minimum of s along the F-path, 0 if i, j lie in different trees.
 */
inline std::vector<double> forest_interpolation(int n, const std::vector<std::pair<int, int>>& all_edges,
                                                std::uint64_t forest, const std::vector<double>& sF) {
  std::vector<std::vector<double>> best(n, std::vector<double>(n, -1.0));
  for (int i = 0; i < n; ++i) best[i][i] = 2.0;
  // Bottleneck (max-min) path values over a forest by repeated relaxation.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t e = 0; e < all_edges.size(); ++e) {
      if (!(forest >> e & 1u)) continue;
      auto [a, b] = all_edges[e];
      for (int src = 0; src < n; ++src) {
        double via_a = std::min(best[src][a], sF[e]);
        if (via_a > best[src][b]) {
          best[src][b] = via_a;
          changed = true;
        }
        double via_b = std::min(best[src][b], sF[e]);
        if (via_b > best[src][a]) {
          best[src][a] = via_b;
          changed = true;
        }
      }
    }
  }
  std::vector<double> s(all_edges.size());
  for (std::size_t e = 0; e < all_edges.size(); ++e) {
    double v = best[all_edges[e].first][all_edges[e].second];
    s[e] = v < 0 ? 0.0 : v;
  }
  return s;
}

inline bool is_forest(int n, const std::vector<std::pair<int, int>>& edges, std::uint64_t mask) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!(mask >> e & 1u)) continue;
    int a = find(edges[e].first), b = find(edges[e].second);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

/** @brief Forest-formula sum and the target value f(1,...,1). */
struct BkarReport {
  double forest_sum = 0.0;
  double target = 0.0;
  std::size_t forests = 0;
  double error() const { return std::abs(forest_sum - target); }
};

/**
 * @brief Evaluates sum_F int ds_F (prod_{e in F} d/ds_e) f(s^F) over forests F of K_n.
 *
 * Integrals use ordered_cube_integral with q Gauss-Legendre nodes per axis.
 */
inline BkarReport bkar_expand(const EdgeFunction& f, int n, int q = 8, int cap = 5) {
  if (n < 1) throw DomainError("bkar_expand: n >= 1 required");
  if (n > cap) throw CapacityError("bkar_expand: n above cap");
  auto edges = complete_edges(n);
  const std::size_t m = edges.size();
  BkarReport r;
  r.target = f.value(std::vector<double>(m, 1.0));
  for (std::uint64_t F = 0; F < (std::uint64_t{1} << m); ++F) {
    if (!is_forest(n, edges, F)) continue;
    ++r.forests;
    std::vector<int> idx;
    for (std::size_t e = 0; e < m; ++e)
      if (F >> e & 1u) idx.push_back(static_cast<int>(e));
    const int k = static_cast<int>(idx.size());
    std::vector<double> sF(m, 0.0);
    r.forest_sum += ordered_cube_integral(
        [&](const std::vector<double>& t) {
          for (int i = 0; i < k; ++i) sF[idx[i]] = t[i];
          return f.derivative(forest_interpolation(n, edges, F, sF), F);
        },
        k, q);
  }
  return r;
}

/** @brief Both sides of the local factorial bound. */
struct LocalFactorialReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double gamma_norm = 0.0;
  double dfrak_norm = 0.0;
  bool holds = false;
};

/// max of sup-row and sup-column sums.
inline double schur_norm(const Eigen::MatrixXd& m) {
  return std::max(m.rowwise().sum().maxCoeff(), m.colwise().sum().maxCoeff());
}

/// sup over exponents p = 1..pmax of the row and column l^p norms.
inline double lp_row_col_norm(const Eigen::MatrixXd& m, int pmax) {
  double best = 0.0;
  for (int p = 1; p <= std::max(1, pmax); ++p) {
    Eigen::MatrixXd a = m.array().pow(p).matrix();
    best = std::max(best, std::pow(a.rowwise().sum().maxCoeff(), 1.0 / p));
    best = std::max(best, std::pow(a.colwise().sum().maxCoeff(), 1.0 / p));
  }
  return best;
}

/**
 * @brief Literal evaluation of sum_{x_c,y_c} prod_c gamma(x_c,y_c) dfrak(x_c,X) prod_x (#{c: x_c = x})!.
 *
 * gamma and dfrak are square over one index set; dfrak(x,X) = max_{y in X} dfrak(x,y).
 */
inline LocalFactorialReport local_factorial_bound_check(const Eigen::MatrixXd& gamma,
                                                        const Eigen::MatrixXd& dfrak,
                                                        const std::vector<int>& X, int d,
                                                        std::size_t cap = 20'000'000) {
  const int u = static_cast<int>(gamma.rows());
  if (gamma.cols() != u || dfrak.rows() != u || dfrak.cols() != u)
    throw DomainError("local_factorial_bound_check: matrices must be square over one index set");
  if (d < 1) throw DomainError("local_factorial_bound_check: d >= 1 required");
  if ((gamma.array() < 0).any() || (dfrak.array() < 0).any())
    throw DomainError("local_factorial_bound_check: entries must be nonnegative");
  double tuples = std::pow(static_cast<double>(u), 2 * d);
  if (tuples > static_cast<double>(cap)) throw CapacityError("local_factorial_bound_check: too many tuples");
  std::vector<double> dX(u, 0.0);
  for (int x = 0; x < u; ++x)
    for (int y : X) dX[x] = std::max(dX[x], dfrak(x, y));
  LocalFactorialReport r;
  std::size_t total = static_cast<std::size_t>(tuples);
  std::vector<int> xs(d), ys(d), mult(u);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t m = t;
    for (int c = 0; c < d; ++c) {
      xs[c] = static_cast<int>(m % u);
      m /= u;
      ys[c] = static_cast<int>(m % u);
      m /= u;
    }
    double p = 1.0;
    std::fill(mult.begin(), mult.end(), 0);
    for (int c = 0; c < d; ++c) {
      p *= gamma(xs[c], ys[c]) * dX[xs[c]];
      ++mult[xs[c]];
    }
    for (int k : mult) p *= static_cast<double>(factorial(k));
    r.lhs += p;
  }
  r.gamma_norm = schur_norm(gamma);
  r.dfrak_norm = lp_row_col_norm(dfrak, d);
  r.rhs = 0.5 * std::pow(2.0 * r.gamma_norm * r.dfrak_norm, d) * factorial(d) *
          std::exp(static_cast<double>(X.size()));
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-12);
  return r;
}

/// Variant with y_c restricted to X and factorials sqrt(#{c: y_c = y}!) on the y side.
inline LocalFactorialReport local_factorial_bound_check_y(const Eigen::MatrixXd& gamma,
                                                          const std::vector<int>& X, int d,
                                                          std::size_t cap = 20'000'000) {
  const int u = static_cast<int>(gamma.rows());
  if (gamma.cols() != u) throw DomainError("local_factorial_bound_check_y: gamma must be square");
  if ((gamma.array() < 0).any()) throw DomainError("local_factorial_bound_check_y: entries must be nonnegative");
  const int k = static_cast<int>(X.size());
  double tuples = std::pow(static_cast<double>(u) * k, d);
  if (tuples > static_cast<double>(cap)) throw CapacityError("local_factorial_bound_check_y: too many tuples");
  LocalFactorialReport r;
  std::size_t total = static_cast<std::size_t>(tuples);
  std::vector<int> mult(k);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t m = t;
    double p = 1.0;
    std::fill(mult.begin(), mult.end(), 0);
    for (int c = 0; c < d; ++c) {
      int x = static_cast<int>(m % u);
      m /= u;
      int yi = static_cast<int>(m % k);
      m /= k;
      p *= gamma(x, X[yi]);
      ++mult[yi];
    }
    for (int c : mult) p *= std::sqrt(static_cast<double>(factorial(c)));
    r.lhs += p;
  }
  r.gamma_norm = schur_norm(gamma);
  r.dfrak_norm = 1.0;
  r.rhs = 0.5 * std::pow(2.0 * r.gamma_norm, d) * factorial(d) * std::exp(static_cast<double>(k));
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-12);
  return r;
}

/**
 * @brief min over x >= 0 of sqrt(D) exp(x^2/D) - (1 + x), attained at x = (sqrt(1+2D) - 1)/2.
 *
 * Nonnegative iff 1 + x <= sqrt(D) exp(x^2/D) holds for all x >= 0.
 */
inline double sqrt_exp_gap(double D) {
  if (!(D > 0)) throw DomainError("sqrt_exp_gap: D > 0 required");
  double x = 0.5 * (std::sqrt(1.0 + 2.0 * D) - 1.0);
  return std::sqrt(D) * std::exp(x * x / D) - (1.0 + x);
}

/// Edge {m, m'} iff some coarse block meets both paved sets.
inline LabeledGraph connectivity_graph(const std::vector<PavedSet>& polymers, const LatticeHierarchy& h) {
  std::vector<std::set<std::size_t>> foot(polymers.size());
  for (std::size_t m = 0; m < polymers.size(); ++m)
    for (int b : polymers[m].blocks)
      for (auto x : h.cube_sites(static_cast<std::size_t>(b))) foot[m].insert(h.coarse_of(x));
  LabeledGraph g;
  g.n = static_cast<int>(polymers.size());
  for (std::size_t a = 0; a < polymers.size(); ++a)
    for (std::size_t b = a + 1; b < polymers.size(); ++b) {
      bool meet = false;
      for (auto X : foot[a])
        if (foot[b].count(X)) {
          meet = true;
          break;
        }
      if (meet) g.edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  return g;
}

/// Calls visit(partition) for every set partition of 0..n-1 (restricted growth strings).
inline void for_each_partition(int n, const std::function<void(const SetPartition&)>& visit) {
  if (n == 0) {
    visit(SetPartition{});
    return;
  }
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int maxb) {
    if (i == n) {
      SetPartition P;
      P.blocks.resize(maxb + 1);
      for (int v = 0; v < n; ++v) P.blocks[a[v]].push_back(v);
      visit(P);
      return;
    }
    for (int b = 0; b <= maxb + 1; ++b) {
      a[i] = b;
      rec(i + 1, std::max(maxb, b));
    }
  };
  a[0] = 0;
  rec(1, 0);
}

/// Bell number by enumeration.
inline std::int64_t bell_number(int n) {
  std::int64_t count = 0;
  for_each_partition(n, [&](const SetPartition&) { ++count; });
  return count;
}

}  // namespace polygas
