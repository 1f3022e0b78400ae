#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "polygas/core.hpp"
#include "polygas/fft.hpp"
#include "polygas/lattice.hpp"

namespace polygas {

/**
 * @brief mu(p) = z phat^2 + nu + amplitude (phat^2)^{3/2}.
 *
 * The cubic term is periodic, even and bounded by |amplitude| |p|^3.
 */
struct MultiplierModel {
  double z = 1.0;
  double nu = 0.0;
  double irrelevant_amplitude = 0.0;
  double C_mu = 1.0;
  double c_mu = 0.5;
  double c_mu_prime = 0.05;

  double operator()(double phat2) const {
    return z * phat2 + nu + irrelevant_amplitude * std::pow(phat2, 1.5);
  }
};

/** @brief Translation-invariant operator on one torus: Fourier multiplier and real-space stencil. */
struct KernelOperator {
  Level level = Level::Block;
  int side = 1;
  int d = 1;
  std::vector<double> multiplier;
  std::vector<double> stencil;
  bool symmetric = true;

  static KernelOperator from_multiplier(Level lvl, int side, int d, std::vector<double> mult) {
    KernelOperator K;
    K.level = lvl;
    K.side = side;
    K.d = d;
    std::vector<cplx> spec(mult.begin(), mult.end());
    K.stencil = fft_inverse_real(spec, side, d);
    K.multiplier = std::move(mult);
    return K;
  }

  Torus torus() const { return Torus(side, d); }

  /// (K f)(x) = sum_y K(x - y) f(y), evaluated in momentum space.
  std::vector<double> apply(const std::vector<double>& f) const {
    auto F = fft_forward_real(f, side, d);
    for (std::size_t p = 0; p < F.size(); ++p) F[p] *= multiplier[p];
    return fft_inverse_real(F, side, d);
  }

  double operator()(std::size_t x, std::size_t y) const { return stencil[torus().sub(x, y)]; }

  Eigen::MatrixXd dense() const {
    Torus T = torus();
    Eigen::MatrixXd M(T.volume(), T.volume());
    for (std::size_t x = 0; x < T.volume(); ++x)
      for (std::size_t y = 0; y < T.volume(); ++y) M(x, y) = stencil[T.sub(x, y)];
    return M;
  }

  /// max |FFT(stencil) - multiplier|.
  double stencil_mismatch() const {
    auto F = fft_forward_real(stencil, side, d);
    double e = 0.0;
    for (std::size_t p = 0; p < F.size(); ++p) e = std::max(e, std::abs(F[p] - cplx(multiplier[p])));
    return e;
  }
};

/// Multiplier of the model on the block-spin torus, with both model invariants checked.
inline KernelOperator gbar_inverse(const MultiplierModel& model, const LatticeHierarchy& h) {
  const Torus& T = h.block();
  std::vector<double> mult(T.volume());
  std::ostringstream bad;
  int nbad = 0;
  for (std::size_t p = 0; p < T.volume(); ++p) {
    double ph2 = T.phat2(p);
    double pn = T.momentum_norm(p);
    mult[p] = model(ph2);
    bool ok = true;
    if (pn >= model.c_mu)
      ok = mult[p] >= model.c_mu_prime;
    else if (pn > 0)
      ok = std::abs(mult[p] - model.z * ph2 - model.nu) <= model.C_mu * pn * pn * pn * (1 + 1e-12);
    if (!ok && nbad++ < 8) bad << " p#" << p << " (|p|=" << pn << ", mu=" << mult[p] << ")";
  }
  if (nbad) throw DomainError("gbar_inverse: model invariant violated at" + bad.str());
  return KernelOperator::from_multiplier(Level::Block, T.side(), T.dim(), std::move(mult));
}

/// Identity background kernel column for n = 0 style checks.
inline std::vector<double> identity_column(const LatticeHierarchy& h) {
  std::vector<double> col(h.fine().volume(), 0.0);
  col[0] = 1.0;
  return col;
}

/**
 * @brief Multiplier of A*A on Lambda, with the adjoint taken in the block-integral measure.
 *
 * (A*A)(z) = L^{-dn} sum_xi A(xi,0) A(xi - L^n z, 0); the autocorrelation is an FFT on Lambda_0.
 */
inline KernelOperator adjoint_product(const BackgroundKernel& A) {
  const auto& h = A.hierarchy();
  const Torus& F = h.fine();
  const Torus& B = h.block();
  auto hat = fft_forward_real(A.column0(), F.side(), F.dim());
  for (auto& v : hat) v = cplx(std::norm(v), 0.0);
  auto corr = fft_inverse_real(hat, F.side(), F.dim());
  std::vector<double> R(B.volume());
  const double inv = 1.0 / h.block_volume();
  for (std::size_t z = 0; z < B.volume(); ++z) R[z] = inv * corr[h.embed(z)];
  auto spec = fft_forward_real(R, B.side(), B.dim());
  std::vector<double> mult(B.volume());
  for (std::size_t p = 0; p < B.volume(); ++p) mult[p] = spec[p].real();
  KernelOperator K;
  K.level = Level::Block;
  K.side = B.side();
  K.d = B.dim();
  K.multiplier = std::move(mult);
  K.stencil = std::move(R);
  return K;
}

/** @brief G^{-1} = Gbar^{-1} + 3 g phibar^2 A*A, its square root Gamma = G^{1/2}, and A Gamma. */
struct Covariance {
  const LatticeHierarchy* h = nullptr;
  const BackgroundKernel* A = nullptr;
  MultiplierModel model;
  double g = 0.0;
  double phibar = 0.0;
  KernelOperator gbar_inv;
  KernelOperator adj;
  KernelOperator g_inv;
  KernelOperator Gamma;
  /// (A Gamma)(xi, 0); other columns by translation covariance.
  std::vector<double> agamma_col;

  double mass2() const { return 3.0 * g * phibar * phibar; }

  double agamma(std::size_t xi, std::size_t y) const {
    return agamma_col[h->fine().sub(xi, h->embed(y))];
  }
};

inline Covariance gamma(const MultiplierModel& model, const BackgroundKernel& A, double g, double phibar) {
  const auto& h = A.hierarchy();
  const Torus& B = h.block();
  const Torus& F = h.fine();
  Covariance c;
  c.h = &h;
  c.A = &A;
  c.model = model;
  c.g = g;
  c.phibar = phibar;
  c.gbar_inv = gbar_inverse(model, h);
  c.adj = adjoint_product(A);
  std::vector<double> mg(B.volume()), gh(B.volume());
  double worst = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t p = 0; p < B.volume(); ++p) {
    mg[p] = c.gbar_inv.multiplier[p] + c.mass2() * c.adj.multiplier[p];
    if (mg[p] < worst) {
      worst = mg[p];
      arg = p;
    }
  }
  if (!(worst > 0.0)) {
    auto k = B.coords(arg);
    std::ostringstream os;
    os << "gamma: G^{-1} not positive, minimum " << worst << " at momentum index (";
    for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ")";
    throw StabilityError(os.str());
  }
  for (std::size_t p = 0; p < B.volume(); ++p) gh[p] = 1.0 / std::sqrt(mg[p]);
  c.g_inv = KernelOperator::from_multiplier(Level::Block, B.side(), B.dim(), mg);
  c.Gamma = KernelOperator::from_multiplier(Level::Block, B.side(), B.dim(), gh);
  c.agamma_col.assign(F.volume(), 0.0);
  for (std::size_t x = 0; x < B.volume(); ++x) {
    double gx = c.Gamma.stencil[x];
    std::size_t e = h.embed(x);
    for (std::size_t xi = 0; xi < F.volume(); ++xi) c.agamma_col[xi] += A.column0()[F.sub(xi, e)] * gx;
  }
  return c;
}

/// Naive O(V^2) cosine transform, independent of the FFT path.
inline std::vector<double> naive_stencil(const Torus& T, const std::function<double(std::size_t)>& mult) {
  const std::size_t V = T.volume();
  std::vector<double> out(V, 0.0);
  std::vector<double> m(V);
  for (std::size_t p = 0; p < V; ++p) m[p] = mult(p);
  for (std::size_t x = 0; x < V; ++x) {
    auto cx = T.coords(x);
    double acc = 0.0;
    for (std::size_t p = 0; p < V; ++p) {
      auto cp = T.coords(p);
      double ph = 0.0;
      for (int a = 0; a < T.dim(); ++a) ph += 2.0 * M_PI * cx[a] * cp[a] / T.side();
      acc += m[p] * std::cos(ph);
    }
    out[x] = acc / static_cast<double>(V);
  }
  return out;
}

/**
 * @brief Operator-norm residual of Gamma Gamma - G on Lambda, with G inverted densely from a
 * real-space assembly of G^{-1} (lattice Laplacian, cosine-sum cubic term, dense A^T A).
 */
inline double gamma_square_residual(const Covariance& c, std::size_t max_sites = 4096) {
  const auto& h = *c.h;
  const Torus& B = h.block();
  const std::size_t V = B.volume();
  if (V > max_sites) throw CapacityError("gamma_square_residual: lattice above dense cap");
  Eigen::MatrixXd Ginv = Eigen::MatrixXd::Zero(V, V);
  for (std::size_t x = 0; x < V; ++x) {
    Ginv(x, x) += c.model.z * 2.0 * B.dim() + c.model.nu;
    auto cx = B.coords(x);
    for (int a = 0; a < B.dim(); ++a)
      for (int s : {-1, 1}) {
        auto cy = cx;
        cy[a] += s;
        Ginv(x, B.index(cy)) -= c.model.z;
      }
  }
  if (c.model.irrelevant_amplitude != 0.0) {
    auto bump = naive_stencil(B, [&](std::size_t p) { return std::pow(B.phat2(p), 1.5); });
    for (std::size_t x = 0; x < V; ++x)
      for (std::size_t y = 0; y < V; ++y) Ginv(x, y) += c.model.irrelevant_amplitude * bump[B.sub(x, y)];
  }
  Eigen::MatrixXd Ad = c.A->dense();
  Ginv += c.mass2() / h.block_volume() * (Ad.transpose() * Ad);
  Eigen::LLT<Eigen::MatrixXd> llt(Ginv);
  if (llt.info() != Eigen::Success) throw StabilityError("gamma_square_residual: dense G^{-1} not SPD");
  Eigen::MatrixXd G = llt.solve(Eigen::MatrixXd::Identity(V, V));
  Eigen::MatrixXd Gam = c.Gamma.dense();
  Eigen::MatrixXd D = Gam * Gam - G;
  D = 0.5 * (D + D.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Coordinates (block, k) of a coarse set; k = 0 is the mean coordinate.
struct DottedIndex {
  std::size_t block;
  std::size_t k;
};

/**
 * @brief Dotted kernel of A Gamma: column (y,1) sums over the block, (y,k) subtracts the first site.
 */
inline Eigen::MatrixXd dotted_agamma(const Covariance& c, const std::vector<std::size_t>& fine_rows,
                                     const std::vector<std::size_t>& coarse) {
  const auto& h = *c.h;
  std::size_t per = h.coarse_sites(0).size();
  Eigen::MatrixXd D(fine_rows.size(), coarse.size() * per);
  for (std::size_t ci = 0; ci < coarse.size(); ++ci) {
    const auto& sites = h.coarse_sites(coarse[ci]);
    for (std::size_t r = 0; r < fine_rows.size(); ++r) {
      std::size_t xi = fine_rows[r];
      double first = c.agamma(xi, sites[0]);
      double sum = 0.0;
      for (auto s : sites) sum += c.agamma(xi, s);
      D(r, ci * per) = sum;
      for (std::size_t k = 1; k < per; ++k) D(r, ci * per + k) = c.agamma(xi, sites[k]) - first;
    }
  }
  return D;
}

/** @brief Schur value of A Gamma between coarse sets, with its comparisons. */
struct HSNormReport {
  double value = 0.0;
  double rough_constant = 0.0;
  double sharp_target = 0.0;
  double margin_condhs = 0.0;
  double gram_top_eigenvalue = 0.0;
  bool rough_ok = false;
  bool sharp_ok = false;
};

/// B^{1/2} for k = mean coordinate, B^{-1/2} otherwise, B = Lcal^d.
inline double dotted_weight(std::size_t k, double B) { return k == 0 ? std::sqrt(B) : 1.0 / std::sqrt(B); }

/// ||phi||_X^2 in block-spin coordinates.
inline double blockspin_norm2(const LatticeHierarchy& h, const std::vector<double>& phi,
                              const std::vector<std::size_t>& X) {
  double B = static_cast<double>(h.coarse_sites(0).size());
  double acc = 0.0;
  for (auto x : X) {
    const auto& s = h.coarse_sites(x);
    double mean = 0.0;
    for (auto v : s) mean += phi[v];
    mean /= B;
    double sq = 0.0, sum = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
      double d = phi[s[k]] - mean;
      sq += d * d;
      sum += d;
    }
    acc += B * mean * mean + (sq + sum * sum) / B;
  }
  return acc;
}

/// Coarse-level Lcal^d-power used in the condition monitors (Lcal^4 in four dimensions).
inline double coarse_volume(const LatticeHierarchy& h) { return static_cast<double>(h.coarse_sites(0).size()); }

inline double condhs_margin(double gphi2, double B) {
  double lg = std::log(gphi2);
  return 1.0 / (std::pow(B, 6) * gphi2 * lg * lg);
}

inline HSNormReport hs_norm(const Covariance& c, const std::vector<std::size_t>& X,
                            const std::vector<std::size_t>& Xp, double eta = 0.25) {
  const auto& h = *c.h;
  if (X.empty() || Xp.empty()) throw DomainError("hs_norm: sets must be nonempty");
  const double B = coarse_volume(h);
  const std::size_t per = static_cast<std::size_t>(B);
  const double meas = 1.0 / h.block_volume();
  std::vector<std::size_t> rows;
  std::vector<std::size_t> row_block;
  for (std::size_t zi = 0; zi < X.size(); ++zi)
    for (auto xi : h.fine_of_coarse(X[zi])) {
      rows.push_back(xi);
      row_block.push_back(zi);
    }
  Eigen::MatrixXd D = dotted_agamma(c, rows, Xp);
  const std::size_t n = D.cols();
  Eigen::MatrixXd absum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t zi = 0; zi < X.size(); ++zi) {
    std::vector<Eigen::Index> idx;
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (row_block[r] == zi) idx.push_back(static_cast<Eigen::Index>(r));
    Eigen::MatrixXd Dz = D(idx, Eigen::all);
    Eigen::MatrixXd Gz = meas * Dz.transpose() * Dz;
    absum += Gz.cwiseAbs();
    gram += Gz;
  }
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) w(i) = 1.0 / dotted_weight(i % per, B);
  HSNormReport r;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += w(i) * w(j) * absum(i, j);
    r.value = std::max(r.value, row);
  }
  Eigen::MatrixXd scaled = w.asDiagonal() * gram * w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
  r.gram_top_eigenvalue = es.eigenvalues().maxCoeff();
  double gphi2 = c.g * c.phibar * c.phibar;
  r.rough_constant = r.value / (std::pow(B, 3) * X.size() * Xp.size());
  r.rough_ok = std::isfinite(r.rough_constant);
  r.sharp_target = (1.0 + eta) / (3.0 * gphi2);
  r.margin_condhs = condhs_margin(gphi2, B);
  r.sharp_ok = r.value <= r.sharp_target;
  return r;
}

/// int over the fine image of X of (A Gamma phi)^2 in the block-integral measure.
inline double agamma_quadratic_form(const Covariance& c, const std::vector<double>& phi,
                                    const std::vector<std::size_t>& X) {
  const auto& h = *c.h;
  double acc = 0.0;
  for (auto Xc : X)
    for (auto xi : h.fine_of_coarse(Xc)) {
      double v = 0.0;
      for (std::size_t y = 0; y < phi.size(); ++y)
        if (phi[y] != 0.0) v += c.agamma(xi, y) * phi[y];
      acc += v * v;
    }
  return acc / h.block_volume();
}

/// Second-dotted kernel Gamma..(x,j; y,k) between two coarse blocks.
inline Eigen::MatrixXd double_dotted(const LatticeHierarchy& h, const KernelOperator& G, std::size_t X,
                                     std::size_t Y) {
  const auto& sx = h.coarse_sites(X);
  const auto& sy = h.coarse_sites(Y);
  const std::size_t per = sx.size();
  const double B = static_cast<double>(per);
  Eigen::MatrixXd M(per, per);
  for (std::size_t j = 0; j < per; ++j)
    for (std::size_t k = 0; k < per; ++k) {
      double acc = 0.0;
      for (auto x : sx) {
        if (j == 0 && k == 0) {
          for (auto y : sy) acc += G(x, y);
        } else if (j == 0) {
          acc += G(x, sy[k]) - G(x, sy[0]);
        } else if (k == 0) {
          for (auto y : sy) acc += G(sx[j], y) - G(x, y);
        } else {
          acc += G(sx[j], sy[k]) - G(sx[j], sy[0]) - G(x, sy[k]) + G(x, sy[0]);
        }
      }
      M(j, k) = acc / B;
    }
  return M;
}

/// ||Gamma||_{x,x'} = sup_k sum_j w(j,k) |Gamma..(x',j; x,k)|.
inline double gamma_pair_norm(const LatticeHierarchy& h, const KernelOperator& G, std::size_t x,
                              std::size_t xp) {
  Eigen::MatrixXd M = double_dotted(h, G, xp, x);
  const double B = coarse_volume(h);
  double best = 0.0;
  for (Eigen::Index k = 0; k < M.cols(); ++k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < M.rows(); ++j) {
      double w = (j > 0 ? B : 1.0) * (k > 0 ? std::sqrt(B) : 1.0 / std::sqrt(B));
      s += w * std::abs(M(j, k));
    }
    best = std::max(best, s);
  }
  return best;
}

/// Euclidean gap between two coarse blocks, in block-lattice units.
inline double coarse_gap(const LatticeHierarchy& h, std::size_t X, std::size_t Y) {
  const Torus& C = h.coarse();
  const int Lc = h.spec().Lcal;
  double s = 0.0;
  for (int a = 0; a < C.dim(); ++a) {
    int k = C.axis_distance(C.coord(X, a), C.coord(Y, a));
    int gap = std::max(0, Lc * k - (Lc - 1));
    s += static_cast<double>(gap) * gap;
  }
  return std::sqrt(s);
}

/** @brief ||Gamma|| as the larger of sup-row and sup-column sums of the pair norms. */
struct GammaNormReport {
  double value = 0.0;
  double measured_constant = 0.0;
  Eigen::MatrixXd pair;
};

inline GammaNormReport gamma_block_norm(const LatticeHierarchy& h, const KernelOperator& G, double gphi2) {
  const std::size_t nc = h.coarse().volume();
  GammaNormReport r;
  r.pair.resize(nc, nc);
  for (std::size_t x = 0; x < nc; ++x)
    for (std::size_t xp = 0; xp < nc; ++xp) r.pair(x, xp) = gamma_pair_norm(h, G, x, xp);
  r.value = std::max(r.pair.rowwise().sum().maxCoeff(), r.pair.colwise().sum().maxCoeff());
  double Lc = h.spec().Lcal;
  r.measured_constant = gphi2 > 0 ? r.value * Lc * Lc * std::sqrt(gphi2) : 0.0;
  return r;
}

/// ||Gamma||_y with the exp(-c_A d/2) decay weight toward block y.
inline double gamma_local_norm(const LatticeHierarchy& h, const KernelOperator& G, std::size_t y, double cA) {
  const std::size_t nc = h.coarse().volume();
  const double B = coarse_volume(h);
  double best = 0.0;
  for (std::size_t x = 0; x < nc; ++x) {
    std::vector<double> col(static_cast<std::size_t>(B), 0.0);
    for (std::size_t xp = 0; xp < nc; ++xp) {
      Eigen::MatrixXd M = double_dotted(h, G, xp, x);
      double decay = std::exp(-0.5 * cA * coarse_gap(h, xp, y));
      for (Eigen::Index k = 0; k < M.cols(); ++k)
        for (Eigen::Index j = 0; j < M.rows(); ++j) {
          double w = (j > 0 ? B : 1.0) * (k > 0 ? std::sqrt(B) : 1.0 / std::sqrt(B));
          col[k] += w * decay * std::abs(M(j, k));
        }
    }
    for (double v : col) best = std::max(best, v);
  }
  return best;
}

/// ||A|| = sup_xi sum_x exp(c_A L^{-n}|L^n x - xi| / 2) |A(xi,x)|; by covariance xi ranges over one block.
inline double a_norm(const BackgroundKernel& A, double cA) {
  if (!(cA >= 0.0)) throw DomainError("a_norm: decay rate must be nonnegative");
  const auto& h = A.hierarchy();
  const Torus& F = h.fine();
  double best = 0.0;
  for (auto xi : h.block_sites(0)) {
    double s = 0.0;
    for (std::size_t x = 0; x < h.block().volume(); ++x) {
      double r = F.distance(h.embed(x), xi) / h.Ln();
      s += std::exp(0.5 * cA * r) * std::abs(A(xi, x));
    }
    best = std::max(best, s);
  }
  if (!std::isfinite(best)) throw DomainError("a_norm: weighted sum not finite for this decay rate");
  return best;
}

/// Smooth step: 1 for t <= 1, 0 for t >= 2, C-infinity in between.
inline double smooth_cutoff(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  auto f = [](double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; };
  double a = f(2.0 - t), b = f(t - 1.0);
  return a / (a + b);
}

/** @brief Annular momentum slices Gamma_j with their scale-normalised sizes. */
struct MultiscaleReport {
  int J = 0;
  std::vector<std::vector<double>> slices;
  std::vector<double> sup_gamma;
  std::vector<double> weighted_sum;
  double reconstruction_error = 0.0;
  double measured_C = 0.0;
};

inline MultiscaleReport multiscale_decompose(const KernelOperator& G, double m2) {
  if (!(m2 > 0.0)) throw StabilityError("multiscale_decompose: m^2 must be positive");
  const Torus T = G.torus();
  const double m = std::sqrt(m2);
  MultiscaleReport r;
  r.J = m >= 1.0 ? 0 : static_cast<int>(std::floor(std::log(1.0 / m)));
  auto kappa = [&](int j, std::size_t p) { return smooth_cutoff(std::exp(j) * T.momentum_norm(p)); };
  std::vector<double> total(T.volume(), 0.0);
  for (int j = 0; j <= r.J; ++j) {
    std::vector<double> mult(T.volume());
    for (std::size_t p = 0; p < T.volume(); ++p) {
      double chi;
      if (r.J == 0)
        chi = 1.0;
      else if (j == 0)
        chi = 1.0 - kappa(1, p);
      else if (j == r.J)
        chi = kappa(j, p);
      else
        chi = kappa(j, p) - kappa(j + 1, p);
      mult[p] = chi * G.multiplier[p];
    }
    std::vector<cplx> spec(mult.begin(), mult.end());
    auto slice = fft_inverse_real(spec, T.side(), T.dim());
    double sup = 0.0, sum = 0.0;
    for (std::size_t x = 0; x < slice.size(); ++x) {
      sup = std::max(sup, std::abs(slice[x]));
      sum += std::abs(slice[x]);
      total[x] += slice[x];
    }
    r.sup_gamma.push_back(std::exp((T.dim() - 1) * j) * sup);
    r.weighted_sum.push_back(sum);
    r.measured_C = std::max(r.measured_C, std::exp((T.dim() - 1) * j) * sum / std::exp(T.dim() * j));
    r.slices.push_back(std::move(slice));
  }
  for (std::size_t x = 0; x < total.size(); ++x)
    r.reconstruction_error = std::max(r.reconstruction_error, std::abs(total[x] - G.stencil[x]));
  return r;
}

/// sup_x sum_y |Gamma - (-z Delta + m^2)^{-1/2}|.
inline double gamma_tilde_norm(const KernelOperator& G, double z, double m2) {
  if (!(m2 > 0.0)) throw StabilityError("gamma_tilde_norm: m^2 must be positive");
  const Torus T = G.torus();
  std::vector<cplx> diff(T.volume());
  for (std::size_t p = 0; p < T.volume(); ++p)
    diff[p] = G.multiplier[p] - 1.0 / std::sqrt(z * T.phat2(p) + m2);
  auto k = fft_inverse_real(diff, T.side(), T.dim());
  double s = 0.0;
  for (double v : k) s += std::abs(v);
  return s;
}

}  // namespace polygas
