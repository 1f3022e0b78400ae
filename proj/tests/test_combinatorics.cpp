#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polygas/combinatorics.hpp"

using namespace polygas;

namespace {

LabeledGraph random_graph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution B(p);
  LabeledGraph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (B(rng)) g.edges.emplace_back(i, j);
  return g;
}

}  // namespace

TEST(Ursell, SmallCases) {
  EXPECT_EQ(ursell(LabeledGraph{1, {}}), 1);
  EXPECT_EQ(ursell(LabeledGraph{2, {{0, 1}}}), -1);
  EXPECT_EQ(ursell(LabeledGraph::complete(3)), 2);
  EXPECT_EQ(ursell(LabeledGraph{3, {{0, 1}}}), 0);
}

TEST(Ursell, CompleteGraphMatchesLogSeries) {
  // log(1 + x) = sum (-1)^{n-1} x^n / n, so rho(K_n) = (-1)^{n-1} (n-1)!
  for (int n = 1; n <= 6; ++n) {
    std::int64_t expect = ((n % 2) ? 1 : -1) * factorial(n - 1);
    EXPECT_EQ(ursell(LabeledGraph::complete(n)), expect);
    EXPECT_EQ(ursell_by_subsets(LabeledGraph::complete(n)), expect);
  }
}

TEST(Ursell, RandomGraphsAgreeWithLogGasOracle) {
  std::mt19937_64 rng(17);
  for (int n = 1; n <= 6; ++n)
    for (int t = 0; t < 15; ++t) {
      auto g = random_graph(n, 0.5, rng);
      double ref = oracle::log_gas_coefficient(g);
      EXPECT_EQ(static_cast<double>(ursell(g)), std::round(ref)) << "n=" << n;
      EXPECT_NEAR(ref, std::round(ref), 1e-9);
      EXPECT_EQ(ursell_by_subsets(g), ursell(g));
    }
}

TEST(Ursell, RelabelingInvariant) {
  std::mt19937_64 rng(5);
  auto g = random_graph(6, 0.6, rng);
  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  LabeledGraph h{6, {}};
  for (auto [a, b] : g.edges) h.edges.emplace_back(std::min(perm[a], perm[b]), std::max(perm[a], perm[b]));
  EXPECT_EQ(ursell(g), ursell(h));
}

TEST(Ursell, CapEnforced) { EXPECT_THROW(ursell(LabeledGraph::complete(9)), CapacityError); }

TEST(Ursell, FromMatrixRejectsAsymmetric) {
  EXPECT_THROW(LabeledGraph::from_matrix({{0, 1}, {0, 0}}), DomainError);
}

TEST(UrsellTreeBound, Examples) {
  auto a = ursell_tree_bound(LabeledGraph{2, {{0, 1}}});
  EXPECT_EQ(a.abs_ursell, 1);
  EXPECT_EQ(a.tree_sum, 1);
  auto b = ursell_tree_bound(LabeledGraph::complete(3));
  EXPECT_EQ(b.abs_ursell, 2);
  EXPECT_EQ(b.tree_sum, 3);
  auto c = ursell_tree_bound(LabeledGraph{3, {{0, 1}}});
  EXPECT_EQ(c.abs_ursell, 0);
  EXPECT_EQ(c.tree_sum, 0);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) EXPECT_TRUE(ursell_tree_bound(random_graph(6, 0.5, rng)).holds);
}

TEST(DTrees, FactorialSums) {
  auto r2 = dtree_factorial_sum(2);
  EXPECT_EQ(r2.lhs, 2);
  EXPECT_EQ(r2.rhs, 16);
  auto r3 = dtree_factorial_sum(3);
  EXPECT_EQ(r3.lhs, 24);
  EXPECT_EQ(r3.rhs, 256);
  for (int n = 2; n <= 7; ++n) EXPECT_TRUE(dtree_factorial_sum(n).holds) << n;
  EXPECT_EQ(dtree_factorial_sum(4).rhs, 8192);
}

TEST(DTrees, CountIsCayleyTimesOrientations) {
  for (int n = 2; n <= 6; ++n) {
    std::int64_t count = 0;
    for_each_dtree(n, [&](const DTree&) { ++count; });
    EXPECT_EQ(count, ipow(n, n - 2) * ipow(2, n - 1));
  }
}

TEST(Cayley, Counts) {
  EXPECT_EQ(cayley_count({3, 1, 1, 1}), 1);
  EXPECT_EQ(cayley_count({1, 1}), 1);
  EXPECT_EQ(cayley_total(4), 16);
  for (int n = 2; n <= 7; ++n) EXPECT_EQ(cayley_total(n), ipow(n, n - 2));
  EXPECT_THROW(cayley_count({2, 2, 2}), DomainError);
}

TEST(Bkar, QuadraticOnSingleEdge) {
  ProductEdgeFunction f({[](double s) { return std::pair{s * s, 2 * s}; }});
  auto r = bkar_expand(f, 2);
  EXPECT_NEAR(r.forest_sum, 1.0, 1e-12);
}

TEST(Bkar, MultilinearIsExact) {
  // edges of K_3: (0,1), (0,2), (1,2)
  MultilinearEdgeFunction f({{0b000, 0.3}, {0b001, 1.0}, {0b110, -0.7}, {0b111, 2.0}});
  auto r = bkar_expand(f, 3);
  EXPECT_NEAR(r.target, 0.3 + 1.0 - 0.7 + 2.0, 1e-15);
  EXPECT_NEAR(r.forest_sum, r.target, 1e-12);
}

TEST(Bkar, ExponentialFactorised) {
  ProductEdgeFunction::Factor e = [](double s) { return std::pair{std::exp(s / 10), std::exp(s / 10) / 10}; };
  ProductEdgeFunction f({e, e, e});
  auto r = bkar_expand(f, 3);
  EXPECT_NEAR(r.forest_sum, std::exp(0.3), 1e-8);
  ProductEdgeFunction f4({e, e, e, e, e, e});
  EXPECT_NEAR(bkar_expand(f4, 4).error(), 0.0, 1e-8);
}

TEST(LocalFactorial, Examples) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(3, 3);
  Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(3, 3);
  g1.row(0) << 0.2, 0.5, 0.1;
  EXPECT_TRUE(local_factorial_bound_check(g1, d, {0}, 1).holds);
  auto z = local_factorial_bound_check(Eigen::MatrixXd::Zero(3, 3), d, {0, 1}, 2);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_TRUE(z.holds);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd g(3, 3), df(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        g(i, j) = U(rng);
        df(i, j) = U(rng);
      }
    EXPECT_TRUE(local_factorial_bound_check(g, df, {0, 2}, 2).holds);
    EXPECT_TRUE(local_factorial_bound_check_y(g, {0, 2}, 2).holds);
  }
}

TEST(SqrtExp, CorrectedFormHoldsForLargeDimension) {
  EXPECT_LT(sqrt_exp_gap(1.0), 0.0);
  for (double D : {4.0, 16.0, 256.0}) EXPECT_GE(sqrt_exp_gap(D), 0.0) << D;
}

TEST(Connectivity, MatchesPairwiseTest) {
  TorusSpec s;
  s.L = 3;
  s.N = 2;
  s.n = 0;
  s.ell = 1;
  s.Lcal = 3;
  s.d = 2;
  LatticeHierarchy h(s);  // 9x9 block lattice, 3x3 coarse lattice
  std::vector<PavedSet> P{{{0, 1}}, {{2}}, {{40}}, {{80, 79}}, {{3}}};
  auto g = connectivity_graph(P, h);
  auto adj = g.adjacency();
  for (std::size_t a = 0; a < P.size(); ++a)
    for (std::size_t b = 0; b < P.size(); ++b) {
      if (a == b) continue;
      bool share = false;
      for (int x : P[a].blocks)
        for (int y : P[b].blocks)
          if (h.coarse_of(h.cube_sites(x).front()) == h.coarse_of(h.cube_sites(y).front())) share = true;
      EXPECT_EQ(static_cast<bool>(adj[a] >> b & 1u), share);
    }
  // coarse blocks are centred: cubes 2 and 3 share one, cubes 0 and 1 do not, cube 80 wraps onto cube 0's
  EXPECT_TRUE(adj[1] >> 4 & 1u);
  EXPECT_FALSE(adj[0] >> 1 & 1u);
  EXPECT_TRUE(adj[0] >> 3 & 1u);
}

TEST(Partitions, BellNumbers) {
  const std::int64_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877};
  for (int n = 1; n <= 7; ++n) EXPECT_EQ(bell_number(n), bell[n]);
}
