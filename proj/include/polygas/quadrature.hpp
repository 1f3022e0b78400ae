#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "polygas/core.hpp"

namespace polygas {

/** @brief One-dimensional quadrature rule. */
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {
// Golub-Welsch: nodes are Jacobi-matrix eigenvalues, weights mu0 * (first eigvec component)^2.
inline Rule golub_welsch(const std::vector<double>& diag, const std::vector<double>& off, double mu0) {
  const int q = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < q; ++i) J(i, i) = diag[i];
  for (int i = 0; i + 1 < q; ++i) J(i, i + 1) = J(i + 1, i) = off[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  r.nodes.resize(q);
  r.weights.resize(q);
  for (int i = 0; i < q; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}
}  // namespace detail

/// Gauss-Legendre rule on [0, 1].
inline Rule gauss_legendre01(int q) {
  if (q < 1) throw DomainError("gauss_legendre01: q >= 1 required");
  std::vector<double> diag(q, 0.0), off(q > 1 ? q - 1 : 0);
  for (int k = 1; k < q; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Rule r = detail::golub_welsch(diag, off, 2.0);
  for (int i = 0; i < q; ++i) {
    r.nodes[i] = 0.5 * (r.nodes[i] + 1.0);
    r.weights[i] *= 0.5;
  }
  return r;
}

/// Gauss-Hermite rule for the standard normal density (weights sum to one).
inline Rule gauss_hermite_prob(int q) {
  if (q < 1) throw DomainError("gauss_hermite_prob: q >= 1 required");
  std::vector<double> diag(q, 0.0), off(q > 1 ? q - 1 : 0);
  for (int k = 1; k < q; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  return detail::golub_welsch(diag, off, 1.0);
}

/**
 * @brief Tensor Gauss-Hermite expectation of f under N(0, I_dim).
 *
 * Cost q^dim evaluations; dim is capped at 8.
 */
inline double gaussian_expectation(const std::function<double(const std::vector<double>&)>& f, int dim,
                                   int q, int max_dim = 8) {
  if (dim > max_dim) throw CapacityError("gaussian_expectation: dimension above tensor cap");
  if (dim == 0) return f({});
  Rule r = gauss_hermite_prob(q);
  std::size_t total = static_cast<std::size_t>(ipow(q, dim));
  std::vector<double> x(dim);
  double acc = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t t = idx;
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      int k = static_cast<int>(t % q);
      t /= q;
      x[a] = r.nodes[k];
      w *= r.weights[k];
    }
    acc += w * f(x);
  }
  return acc;
}

/**
 * @brief Integral over the unit cube [0,1]^k split into the k! ordering simplices.
 *
 * Inside each simplex s_{pi(1)} < ... < s_{pi(k)} the coordinates are
 * t_k = u_k, t_i = u_i t_{i+1}, so piecewise-smooth integrands whose kinks
 * sit on the hyperplanes s_i = s_j are integrated with spectral accuracy.
 */
inline double ordered_cube_integral(const std::function<double(const std::vector<double>&)>& f, int k,
                                    int q) {
  if (k == 0) return f({});
  Rule r = gauss_legendre01(q);
  std::vector<int> perm(k);
  for (int i = 0; i < k; ++i) perm[i] = i;
  std::vector<double> s(k), t(k);
  std::size_t total = static_cast<std::size_t>(ipow(q, k));
  double acc = 0.0;
  do {
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t m = idx;
      double w = 1.0;
      double upper = 1.0;
      for (int i = k - 1; i >= 0; --i) {
        int node = static_cast<int>(m % q);
        m /= q;
        t[i] = r.nodes[node] * upper;
        w *= r.weights[node] * upper;
        upper = t[i];
      }
      for (int i = 0; i < k; ++i) s[perm[i]] = t[i];
      acc += w * f(s);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

}  // namespace polygas
