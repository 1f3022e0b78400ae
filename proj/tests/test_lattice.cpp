#include <gtest/gtest.h>

#include <random>

#include "polygas/lattice.hpp"

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

std::vector<double> random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  std::vector<double> v(n);
  for (auto& x : v) x = N01(rng);
  return v;
}

}  // namespace

TEST(Hierarchy, Cardinalities) {
  LatticeHierarchy h(spec(3, 2, 1, 4));
  EXPECT_EQ(h.fine().volume(), 6561u);
  EXPECT_EQ(h.block().volume(), 81u);
  EXPECT_EQ(h.block_sites(0).size(), 81u);
  LatticeHierarchy c(spec(3, 2, 1, 4, 3, 3));
  EXPECT_EQ(c.coarse().volume(), 1u);
}

TEST(Hierarchy, BlocksPartitionFineLattice) {
  for (auto s : {spec(3, 2, 1, 2), spec(3, 3, 1, 2, 1, 3), spec(3, 2, 1, 3)}) {
    LatticeHierarchy h(s);
    std::vector<int> hits(h.fine().volume(), 0);
    for (std::size_t x = 0; x < h.block().volume(); ++x)
      for (auto xi : h.block_sites(x)) {
        ++hits[xi];
        EXPECT_EQ(h.block_of(xi), x);
      }
    for (int c : hits) EXPECT_EQ(c, 1);
    std::vector<int> chits(h.block().volume(), 0);
    for (std::size_t X = 0; X < h.coarse().volume(); ++X)
      for (auto x : h.coarse_sites(X)) ++chits[x];
    for (int c : chits) EXPECT_EQ(c, 1);
  }
}

TEST(Hierarchy, InvalidSpecsRejected) {
  EXPECT_THROW(LatticeHierarchy(spec(4, 2, 1, 2)), ConfigError);
  EXPECT_THROW(LatticeHierarchy(spec(3, 2, 3, 2)), ConfigError);
  EXPECT_THROW(LatticeHierarchy(spec(3, 2, 1, 2, 2, 2)), ConfigError);
  EXPECT_THROW(LatticeHierarchy(spec(3, 2, 1, 2, 3, 1)), ConfigError);
}

TEST(BlockAverage, NZeroIsIdentity) {
  LatticeHierarchy h(spec(3, 1, 0, 2));
  auto v = random_field(h.fine().volume(), 1);
  auto out = block_average(Field{Level::Fine, v}, h);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(out.values[i], v[i]);
}

TEST(BlockAverage, ConstantScalesAsLToTheN) {
  LatticeHierarchy h(spec(3, 2, 1, 4));
  Field c{Level::Fine, std::vector<double>(h.fine().volume(), 2.0)};
  auto out = block_average(c, h);
  for (double v : out.values) EXPECT_NEAR(v, 2.0 * 3.0, 1e-12);
}

TEST(BlockAverage, SingleSiteIndicator) {
  LatticeHierarchy h(spec(3, 2, 1, 4));
  Field e{Level::Fine, std::vector<double>(h.fine().volume(), 0.0)};
  std::size_t xi = h.block_sites(5)[7];
  e.values[xi] = 1.0;
  auto out = block_average(e, h);
  for (std::size_t x = 0; x < out.values.size(); ++x) EXPECT_NEAR(out.values[x], x == 5 ? 1.0 / 27.0 : 0.0, 1e-15);
}

TEST(BackgroundKernel, NZeroIsIdentity) {
  LatticeHierarchy h(spec(3, 1, 0, 2));
  auto A = background_kernel(h);
  auto M = A.dense();
  EXPECT_LT((M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BackgroundKernel, RowSumsAndDuals) {
  for (auto s : {spec(3, 2, 1, 2), spec(3, 3, 1, 2), spec(3, 2, 1, 4)}) {
    LatticeHierarchy h(s);
    auto A = background_kernel(h);
    auto M = A.dense();
    EXPECT_LT((M.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    // block means of column y are delta_{x,y}
    for (std::size_t y = 0; y < h.block().volume(); y += 7) {
      Field col{Level::Fine, std::vector<double>(M.col(y).data(), M.col(y).data() + M.rows())};
      auto m = block_mean(col, h);
      for (std::size_t x = 0; x < m.values.size(); ++x) EXPECT_NEAR(m.values[x], x == y ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(BackgroundKernel, TranslationCovariance) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  auto M = A.dense();
  const auto& F = h.fine();
  const auto& B = h.block();
  for (std::size_t y = 0; y < B.volume(); ++y)
    for (std::size_t xi = 0; xi < F.volume(); xi += 5)
      EXPECT_NEAR(M(F.add(xi, h.embed(y)), y), M(xi, 0), 1e-12);
}

TEST(BackgroundKernel, DecaysExponentially) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  EXPECT_GT(fit_decay_rate(A), 0.0);
}

TEST(LargeField, ZeroFieldHasEmptySet) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  std::vector<double> phi(h.block().volume(), 0.0);
  EXPECT_TRUE(large_field_set(A, phi, 1.0, 1.0).blocks.empty());
}

TEST(LargeField, UniformLargeFieldCoversLattice) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  std::vector<double> phi(h.block().volume(), 2.0);
  EXPECT_EQ(large_field_set(A, phi, 1.0, 1.0).count(), h.paving().volume());
}

TEST(LargeField, SpikeMatchesExhaustiveMinimum) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  const double T = 0.5, rate = 2.0;
  std::vector<double> phi(h.block().volume(), 0.0);
  phi[4] = 10 * T;
  auto D = large_field_set(A, phi, T, rate);
  EXPECT_TRUE(large_field_admissible(A, phi, T, rate, D));
  const std::size_t nb = h.paving().volume();
  std::size_t best = nb + 1;
  std::vector<PavedSet> minima;
  for (std::uint32_t m = 0; m < (1u << nb); ++m) {
    PavedSet S;
    for (std::size_t b = 0; b < nb; ++b)
      if (m >> b & 1u) S.blocks.push_back(static_cast<int>(b));
    if (!large_field_admissible(A, phi, T, rate, S)) continue;
    if (S.count() < best) {
      best = S.count();
      minima.clear();
    }
    if (S.count() == best) minima.push_back(S);
  }
  ASSERT_EQ(minima.size(), 1u);
  EXPECT_EQ(D, minima.front());
}

TEST(LargeField, MonotoneInPointwiseMagnitude) {
  LatticeHierarchy h(spec(3, 2, 1, 2));
  auto A = background_kernel(h);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(h.block().volume()), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = 1.5 * U(rng);
      b[i] = a[i] * (1.0 + U(rng));
    }
    auto Da = large_field_set(A, a, 1.0, 1.0), Db = large_field_set(A, b, 1.0, 1.0);
    for (int blk : Da.blocks) EXPECT_TRUE(Db.contains(blk));
  }
}

TEST(PavedGeometry, TreeLengths) {
  LatticeHierarchy h(spec(3, 3, 1, 2));  // 9x9 paving of unit cubes
  EXPECT_EQ(paved_geometry(h, PavedSet{{4}}).tree_length, 0.0);
  EXPECT_EQ(paved_geometry(h, PavedSet{}).count, 0u);
  EXPECT_DOUBLE_EQ(tree_length(h, PavedSet{{0, 1}}), 1.0);
  // L-shape (0,0),(1,0),(2,0),(2,1): exhaustive over the 16 labelled trees on 4 centres
  std::vector<int> Ls = {0, 1, 2, 11};
  double best = 1e9;
  const int n = 4;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      // Pruefer sequence (a, b)
      std::vector<int> seq{a, b}, deg(n, 1);
      for (int s : seq) ++deg[s];
      double len = 0.0;
      for (int s : seq) {
        int leaf = 0;
        while (deg[leaf] != 1) ++leaf;
        len += cube_distance(h, Ls[leaf], Ls[s]);
        --deg[leaf];
        --deg[s];
      }
      int u = -1, v = -1;
      for (int i = 0; i < n; ++i)
        if (deg[i] == 1) (u < 0 ? u : v) = i;
      len += cube_distance(h, Ls[u], Ls[v]);
      best = std::min(best, len);
    }
  EXPECT_NEAR(tree_length(h, PavedSet{Ls}), best, 1e-12);
  EXPECT_NEAR(best, 3.0, 1e-12);
}

TEST(PavedGeometry, TranslationInvariantAndClosure) {
  LatticeHierarchy h(spec(3, 3, 1, 2));
  PavedSet X{{0, 2, 20}}, Y{{10, 12, 30}};
  EXPECT_NEAR(tree_length(h, X), tree_length(h, Y), 1e-12);
  EXPECT_EQ(closure(h, PavedSet{{40}}).count(), 9u);
}
