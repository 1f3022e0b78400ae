#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "polygas/core.hpp"
#include "polygas/fft.hpp"

namespace polygas {

/** @brief Periodic cubic lattice (Z/side Z)^d with lexicographic site indices. */
class Torus {
 public:
  Torus() = default;
  Torus(int side, int d) : side_(side), d_(d), volume_(static_cast<std::size_t>(ipow(side, d))) {}

  int side() const { return side_; }
  int dim() const { return d_; }
  std::size_t volume() const { return volume_; }

  /// Coordinate of `index` along `axis` (axis 0 varies fastest).
  int coord(std::size_t index, int axis) const {
    for (int a = 0; a < axis; ++a) index /= side_;
    return static_cast<int>(index % side_);
  }

  std::vector<int> coords(std::size_t index) const {
    std::vector<int> c(d_);
    for (int a = 0; a < d_; ++a) {
      c[a] = static_cast<int>(index % side_);
      index /= side_;
    }
    return c;
  }

  int wrap(long long c) const {
    long long m = c % side_;
    return static_cast<int>(m < 0 ? m + side_ : m);
  }

  std::size_t index(const std::vector<int>& c) const {
    std::size_t idx = 0;
    for (int a = d_ - 1; a >= 0; --a) idx = idx * side_ + static_cast<std::size_t>(wrap(c[a]));
    return idx;
  }

  /// Index of site `i` translated by the coordinates of site `j`.
  std::size_t add(std::size_t i, std::size_t j) const {
    std::size_t out = 0, stride = 1;
    for (int a = 0; a < d_; ++a) {
      int c = static_cast<int>((i % side_ + j % side_) % side_);
      out += stride * c;
      stride *= side_;
      i /= side_;
      j /= side_;
    }
    return out;
  }

  std::size_t sub(std::size_t i, std::size_t j) const {
    std::size_t out = 0, stride = 1;
    for (int a = 0; a < d_; ++a) {
      int c = static_cast<int>((i % side_ + side_ - j % side_) % side_);
      out += stride * c;
      stride *= side_;
      i /= side_;
      j /= side_;
    }
    return out;
  }

  /// Shortest periodic separation of two coordinates along one axis.
  int axis_distance(int a, int b) const {
    int diff = std::abs(a - b) % side_;
    return std::min(diff, side_ - diff);
  }

  /// Euclidean torus distance between two sites.
  double distance(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (int a = 0; a < d_; ++a) {
      int dd = axis_distance(static_cast<int>(i % side_), static_cast<int>(j % side_));
      s += static_cast<double>(dd) * dd;
      i /= side_;
      j /= side_;
    }
    return std::sqrt(s);
  }

  /// Lattice momentum squared sum_i (2 - 2 cos p_i) at dual site `index`.
  double phat2(std::size_t index) const {
    double s = 0.0;
    for (int a = 0; a < d_; ++a) {
      double p = 2.0 * M_PI * static_cast<double>(index % side_) / side_;
      s += 2.0 - 2.0 * std::cos(p);
      index /= side_;
    }
    return s;
  }

  /// Euclidean norm of the momentum in (-pi, pi]^d.
  double momentum_norm(std::size_t index) const {
    double s = 0.0;
    for (int a = 0; a < d_; ++a) {
      int k = static_cast<int>(index % side_);
      if (2 * k > side_) k -= side_;
      double p = 2.0 * M_PI * k / side_;
      s += p * p;
      index /= side_;
    }
    return std::sqrt(s);
  }

 private:
  int side_ = 1;
  int d_ = 1;
  std::size_t volume_ = 1;
};

/**
 * @brief Scale parameters of the three nested tori.
 *
 * Fine lattice side L^N, block-spin lattice side L^(N-n), coarse lattice
 * side L^(N-n)/Lcal; ell is the side of a paving cube inside the block lattice.
 */
struct TorusSpec {
  int L = 3;
  int N = 1;
  int n = 0;
  int ell = 1;
  int Lcal = 1;
  int d = 4;

  void validate() const {
    if (L < 3 || L % 2 == 0) throw ConfigError("L must be an odd integer >= 3");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (n < 0 || n > N) throw ConfigError("n must lie in [0, N]");
    if (d < 1) throw ConfigError("d must be >= 1");
    if (ell < 1) throw ConfigError("ell must be positive");
    int e = ell;
    while (e % L == 0) e /= L;
    if (e != 1) throw ConfigError("ell must be a power of L");
    if (Lcal < 1 || Lcal % ell != 0) throw ConfigError("Lcal must be a positive multiple of ell");
    if (ipow(L, N - n) % Lcal != 0) throw ConfigError("Lcal must divide L^(N-n)");
  }
};

enum class Level { Fine, Block, Coarse };

/** @brief Real field tagged with the lattice level it lives on. */
struct Field {
  Level level = Level::Block;
  std::vector<double> values;
};

/** @brief Sorted set of paving-cube indices of the block lattice. */
struct PavedSet {
  std::vector<int> blocks;

  std::size_t count() const { return blocks.size(); }
  bool contains(int b) const { return std::binary_search(blocks.begin(), blocks.end(), b); }
  void normalize() {
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  }
  bool operator==(const PavedSet& o) const { return blocks == o.blocks; }
};

/**
 * @brief Lambda_0 > Lambda > Upsilon with their block maps.
 *
 * Blocks are cubes of odd side centred at the scaled lattice point, so
 * site x of a coarser level owns offsets in [-(b-1)/2, (b-1)/2]^d.
 */
class LatticeHierarchy {
 public:
  explicit LatticeHierarchy(const TorusSpec& spec) : spec_(spec) {
    spec.validate();
    Ln_ = static_cast<int>(ipow(spec.L, spec.n));
    fine_ = Torus(static_cast<int>(ipow(spec.L, spec.N)), spec.d);
    block_ = Torus(static_cast<int>(ipow(spec.L, spec.N - spec.n)), spec.d);
    coarse_ = Torus(block_.side() / spec.Lcal, spec.d);
    paving_ = Torus(block_.side() / spec.ell, spec.d);
    block_sites_ = build_blocks(fine_, block_, Ln_);
    coarse_sites_ = build_blocks(block_, coarse_, spec.Lcal);
    cube_sites_ = build_blocks(block_, paving_, spec.ell);
    block_of_site_ = owner_map(block_sites_, fine_.volume());
    coarse_of_site_ = owner_map(coarse_sites_, block_.volume());
    cube_of_site_ = owner_map(cube_sites_, block_.volume());
  }

  const TorusSpec& spec() const { return spec_; }
  const Torus& fine() const { return fine_; }
  const Torus& block() const { return block_; }
  const Torus& coarse() const { return coarse_; }
  const Torus& paving() const { return paving_; }
  int Ln() const { return Ln_; }

  /// Sites of Lambda_0 in the block of x in Lambda.
  const std::vector<std::size_t>& block_sites(std::size_t x) const { return block_sites_[x]; }
  /// Sites of Lambda in the coarse block of a point of Upsilon, in the fixed k-order.
  const std::vector<std::size_t>& coarse_sites(std::size_t X) const { return coarse_sites_[X]; }
  /// Sites of Lambda in paving cube b.
  const std::vector<std::size_t>& cube_sites(std::size_t b) const { return cube_sites_[b]; }
  std::size_t block_of(std::size_t xi) const { return block_of_site_[xi]; }
  std::size_t coarse_of(std::size_t x) const { return coarse_of_site_[x]; }
  std::size_t cube_of(std::size_t x) const { return cube_of_site_[x]; }

  /// Sites of Lambda_0 in the fine image of a coarse block.
  std::vector<std::size_t> fine_of_coarse(std::size_t X) const {
    std::vector<std::size_t> out;
    for (auto x : coarse_sites_[X])
      out.insert(out.end(), block_sites_[x].begin(), block_sites_[x].end());
    return out;
  }

  /// Position of a Lambda site embedded in Lambda_0 (the centre of its block).
  std::size_t embed(std::size_t x) const {
    auto c = block_.coords(x);
    for (auto& v : c) v *= Ln_;
    return fine_.index(c);
  }

  /// Scaling exponent of the block-spin operator, L^{-n(d+2)/2}.
  double blockspin_scale() const {
    return std::pow(static_cast<double>(spec_.L), -0.5 * spec_.n * (spec_.d + 2));
  }

  /// Sites per block, L^{dn}.
  double block_volume() const { return static_cast<double>(block_sites_[0].size()); }

 private:
  static std::vector<std::vector<std::size_t>> build_blocks(const Torus& fine, const Torus& coarse,
                                                            int b) {
    int half = (b - 1) / 2;
    std::size_t per = static_cast<std::size_t>(ipow(b, fine.dim()));
    std::vector<std::vector<std::size_t>> out(coarse.volume());
    std::vector<int> c(fine.dim());
    for (std::size_t X = 0; X < coarse.volume(); ++X) {
      auto base = coarse.coords(X);
      out[X].reserve(per);
      for (std::size_t o = 0; o < per; ++o) {
        std::size_t r = o;
        for (int a = 0; a < fine.dim(); ++a) {
          c[a] = base[a] * b + static_cast<int>(r % b) - half;
          r /= b;
        }
        out[X].push_back(fine.index(c));
      }
    }
    return out;
  }

  static std::vector<std::size_t> owner_map(const std::vector<std::vector<std::size_t>>& blocks,
                                            std::size_t volume) {
    std::vector<std::size_t> owner(volume, std::numeric_limits<std::size_t>::max());
    for (std::size_t X = 0; X < blocks.size(); ++X)
      for (auto s : blocks[X]) {
        if (owner[s] != std::numeric_limits<std::size_t>::max())
          throw ConfigError("blocks overlap: partition property violated");
        owner[s] = X;
      }
    for (auto o : owner)
      if (o == std::numeric_limits<std::size_t>::max())
        throw ConfigError("blocks do not cover the lattice");
    return owner;
  }

  TorusSpec spec_;
  int Ln_ = 1;
  Torus fine_, block_, coarse_, paving_;
  std::vector<std::vector<std::size_t>> block_sites_, coarse_sites_, cube_sites_;
  std::vector<std::size_t> block_of_site_, coarse_of_site_, cube_of_site_;
};

inline LatticeHierarchy build_hierarchy(const TorusSpec& spec) { return LatticeHierarchy(spec); }

/// (C psi)_x = L^{-n(d+2)/2} sum over the block of x.
inline Field block_average(const Field& psi, const LatticeHierarchy& h) {
  if (psi.values.size() != h.fine().volume()) throw DomainError("block_average: field not on Lambda_0");
  Field out{Level::Block, std::vector<double>(h.block().volume(), 0.0)};
  double s = h.blockspin_scale();
  for (std::size_t x = 0; x < out.values.size(); ++x) {
    double acc = 0.0;
    for (auto xi : h.block_sites(x)) acc += psi.values[xi];
    out.values[x] = s * acc;
  }
  return out;
}

/// Plain block mean L^{-dn} sum over the block of x; the constraint operator of the kernel.
inline Field block_mean(const Field& psi, const LatticeHierarchy& h) {
  if (psi.values.size() != h.fine().volume()) throw DomainError("block_mean: field not on Lambda_0");
  Field out{Level::Block, std::vector<double>(h.block().volume(), 0.0)};
  double inv = 1.0 / h.block_volume();
  for (std::size_t x = 0; x < out.values.size(); ++x) {
    double acc = 0.0;
    for (auto xi : h.block_sites(x)) acc += psi.values[xi];
    out.values[x] = inv * acc;
  }
  return out;
}

/**
 * @brief Background-field kernel, stored as its x = 0 column.
 *
 * Translation covariance A(xi + L^n y, x + y) = A(xi, x) reduces the
 * |Lambda_0| x |Lambda| kernel to one column.
 */
class BackgroundKernel {
 public:
  BackgroundKernel() = default;
  BackgroundKernel(const LatticeHierarchy* h, std::vector<double> column0)
      : h_(h), col_(std::move(column0)) {}

  const LatticeHierarchy& hierarchy() const { return *h_; }
  const std::vector<double>& column0() const { return col_; }

  double operator()(std::size_t xi, std::size_t x) const {
    return col_[h_->fine().sub(xi, h_->embed(x))];
  }

  Field apply(const Field& phi) const {
    if (phi.values.size() != h_->block().volume()) throw DomainError("kernel: field not on Lambda");
    const auto& F = h_->fine();
    Field out{Level::Fine, std::vector<double>(F.volume(), 0.0)};
    for (std::size_t x = 0; x < phi.values.size(); ++x) {
      double v = phi.values[x];
      if (v == 0.0) continue;
      std::size_t e = h_->embed(x);
      for (std::size_t xi = 0; xi < F.volume(); ++xi) out.values[xi] += col_[F.sub(xi, e)] * v;
    }
    return out;
  }

  /// Dense |Lambda_0| x |Lambda| matrix.
  Eigen::MatrixXd dense() const {
    const auto& F = h_->fine();
    Eigen::MatrixXd M(F.volume(), h_->block().volume());
    for (std::size_t x = 0; x < h_->block().volume(); ++x) {
      std::size_t e = h_->embed(x);
      for (std::size_t xi = 0; xi < F.volume(); ++xi) M(xi, x) = col_[F.sub(xi, e)];
    }
    return M;
  }

  /// Residual of the constraint solve, max |C A - 1|, recorded at construction.
  double solve_residual = 0.0;

 private:
  const LatticeHierarchy* h_ = nullptr;
  std::vector<double> col_;
};

/**
 * @brief Minimiser of psi(-Delta)psi with prescribed block means.
 *
 * Q = (-Delta + L^{-dN} J)^{-1} is diagonal in momentum space (J the
 * all-ones matrix, eigenvalue L^{dN} on constants), and
 * A = Q Cbar^T (Cbar Q Cbar^T)^{-1} with a dense Cholesky solve.
 */
inline BackgroundKernel background_kernel(const LatticeHierarchy& h, double tolerance = 1e-11) {
  const Torus& F = h.fine();
  const Torus& B = h.block();
  const int s = F.side(), d = F.dim();
  const double inv_bv = 1.0 / h.block_volume();

  std::vector<cplx> ind(F.volume(), cplx(0.0));
  for (auto xi : h.block_sites(0)) ind[xi] = inv_bv;
  fft_cube(ind, s, d, true);
  for (std::size_t p = 0; p < F.volume(); ++p) {
    double mult = F.phat2(p) + (p == 0 ? 1.0 : 0.0);
    ind[p] /= mult;
  }
  fft_cube(ind, s, d, false);
  std::vector<double> v(F.volume());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = ind[i].real();

  // Circulant constraint matrix M(y, y') = m(y - y').
  std::vector<double> m(B.volume(), 0.0);
  for (std::size_t z = 0; z < B.volume(); ++z) {
    double acc = 0.0;
    for (auto xi : h.block_sites(z)) acc += v[xi];
    m[z] = acc * inv_bv;
  }
  Eigen::MatrixXd M(B.volume(), B.volume());
  for (std::size_t y = 0; y < B.volume(); ++y)
    for (std::size_t yp = 0; yp < B.volume(); ++yp) M(y, yp) = m[B.sub(y, yp)];
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(B.volume());
  rhs(0) = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw NumericError("background_kernel: constraint matrix not SPD");
  Eigen::VectorXd w = llt.solve(rhs);
  double res = (M * w - rhs).cwiseAbs().maxCoeff();
  if (!(res <= tolerance)) throw NumericError("background_kernel: solve residual " + std::to_string(res));

  std::vector<double> col(F.volume(), 0.0);
  for (std::size_t y = 0; y < B.volume(); ++y) {
    double wy = w(y);
    std::size_t e = h.embed(y);
    for (std::size_t xi = 0; xi < F.volume(); ++xi) col[xi] += v[F.sub(xi, e)] * wy;
  }
  BackgroundKernel K(&h, std::move(col));
  K.solve_residual = res;
  return K;
}

/// Least-squares decay rate c in |A(xi,0)| ~ exp(-c L^{-n}|xi|); positive for a decaying kernel.
inline double fit_decay_rate(const BackgroundKernel& A, double floor = 1e-14) {
  const auto& h = A.hierarchy();
  const auto& F = h.fine();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t xi = 0; xi < F.volume(); ++xi) {
    double a = std::abs(A.column0()[xi]);
    if (a < floor) continue;
    double r = F.distance(xi, 0) / h.Ln();
    double y = std::log(a);
    sx += r;
    sy += y;
    sxx += r * r;
    sxy += r * y;
    ++cnt;
  }
  if (cnt < 2) return 0.0;
  double denom = cnt * sxx - sx * sx;
  if (denom <= 0.0) return 0.0;
  double slope = (cnt * sxy - sx * sy) / denom;
  return -slope;
}

/// Euclidean distance from fine site xi to the fine image of paving cube b.
inline double distance_to_cube(const LatticeHierarchy& h, std::size_t xi, std::size_t b) {
  const Torus& F = h.fine();
  const Torus& P = h.paving();
  const int width = h.spec().ell * h.Ln();
  const int half = (width - 1) / 2;
  double s = 0.0;
  std::size_t bi = b;
  for (int a = 0; a < F.dim(); ++a) {
    int centre = static_cast<int>(bi % P.side()) * width;
    bi /= P.side();
    int c = static_cast<int>(xi % F.side());
    xi /= F.side();
    int gap = std::max(0, F.axis_distance(c, F.wrap(centre)) - half);
    s += static_cast<double>(gap) * gap;
  }
  return std::sqrt(s);
}

/**
 * @brief Smallest paved D with |(A phi)_xi| <= T exp(rate L^{-n} d(xi, box of D^c)).
 *
 * A site with |psi| > T forces every cube closer than
 * r = L^n log(|psi|/T)/rate into D. Admissible sets are closed under
 * intersection, so the union of forced cubes is the unique minimum.
 */
inline PavedSet large_field_set(const BackgroundKernel& A, const std::vector<double>& phi,
                                double threshold, double rate) {
  if (!(threshold > 0.0)) throw DomainError("large_field_set: threshold must be positive");
  const auto& h = A.hierarchy();
  Field psi = A.apply(Field{Level::Block, phi});
  PavedSet D;
  std::vector<char> in(h.paving().volume(), 0);
  for (std::size_t xi = 0; xi < psi.values.size(); ++xi) {
    double a = std::abs(psi.values[xi]);
    if (a <= threshold) continue;
    double r = rate > 0 ? h.Ln() * std::log(a / threshold) / rate
                        : std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < in.size(); ++b)
      if (!in[b] && distance_to_cube(h, xi, b) < r) in[b] = 1;
  }
  for (std::size_t b = 0; b < in.size(); ++b)
    if (in[b]) D.blocks.push_back(static_cast<int>(b));
  return D;
}

/// Checks the defining bound for a candidate D directly.
inline bool large_field_admissible(const BackgroundKernel& A, const std::vector<double>& phi,
                                   double threshold, double rate, const PavedSet& D) {
  const auto& h = A.hierarchy();
  Field psi = A.apply(Field{Level::Block, phi});
  for (std::size_t xi = 0; xi < psi.values.size(); ++xi) {
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < h.paving().volume(); ++b)
      if (!D.contains(static_cast<int>(b))) dist = std::min(dist, distance_to_cube(h, xi, b));
    if (std::isinf(dist)) continue;
    double bound = threshold * std::exp(rate * dist / h.Ln());
    if (std::abs(psi.values[xi]) > bound) return false;
  }
  return true;
}

/** @brief Block count, minimal-spanning-tree length and closure of a paved set. */
struct PavedGeometry {
  std::size_t count = 0;
  double tree_length = 0.0;
  PavedSet closure;
};

/// Centre-to-centre Euclidean torus distance of two paving cubes, in block-lattice units.
inline double cube_distance(const LatticeHierarchy& h, int a, int b) {
  return h.spec().ell * h.paving().distance(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
}

/// Prim's algorithm on the complete graph of cube centres.
inline double tree_length(const LatticeHierarchy& h, const PavedSet& X) {
  std::size_t k = X.blocks.size();
  if (k <= 1) return 0.0;
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  std::vector<char> used(k, 0);
  best[0] = 0.0;
  double total = 0.0;
  for (std::size_t it = 0; it < k; ++it) {
    std::size_t u = k;
    for (std::size_t i = 0; i < k; ++i)
      if (!used[i] && (u == k || best[i] < best[u])) u = i;
    used[u] = 1;
    total += best[u];
    for (std::size_t i = 0; i < k; ++i)
      if (!used[i]) best[i] = std::min(best[i], cube_distance(h, X.blocks[u], X.blocks[i]));
  }
  return total;
}

/// Cubes at site-set distance at most one from X (face, edge and corner neighbours).
inline PavedSet closure(const LatticeHierarchy& h, const PavedSet& X) {
  const Torus& P = h.paving();
  PavedSet out;
  for (std::size_t b = 0; b < P.volume(); ++b) {
    for (int x : X.blocks) {
      bool near = true;
      for (int a = 0; a < P.dim(); ++a)
        if (P.axis_distance(P.coord(b, a), P.coord(static_cast<std::size_t>(x), a)) > 1) near = false;
      if (near) {
        out.blocks.push_back(static_cast<int>(b));
        break;
      }
    }
  }
  return out;
}

inline PavedGeometry paved_geometry(const LatticeHierarchy& h, const PavedSet& X) {
  return {X.count(), tree_length(h, X), closure(h, X)};
}

}  // namespace polygas
