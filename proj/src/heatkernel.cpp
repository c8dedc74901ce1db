#include "fkpz/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#ifdef FKPZ_HAVE_LAPACKE
#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#endif

namespace fkpz {

namespace {
// Full symmetric decomposition; divide-and-conquer when LAPACKE is in.
void full_symmetric_eig(const Eigen::MatrixXd& M, Eigen::VectorXd& values,
                        Eigen::MatrixXd& vectors) {
#ifdef FKPZ_HAVE_LAPACKE
  const int n = static_cast<int>(M.rows());
  vectors = M;
  values.resize(n);
  lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, vectors.data(), n, values.data());
  if (info == 0) return;
#endif
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw EigFailure("symmetric eigensolver did not converge");
  values = es.eigenvalues();
  vectors = es.eigenvectors();
}
}  // namespace

KernelBundle eigendecompose(const OperatorMatrix& A, int count) {
  const int n = A.size();
  if (count < 1 || count > n) throw EigFailure("count must lie in [1, node count]");

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  full_symmetric_eig(A.entries, values, vectors);

  KernelBundle K;
  K.op = &A;
  K.mu = values.head(count);
  K.psi = vectors.leftCols(count);

  if (K.mu[0] <= 0.0) throw EigFailure("nonpositive eigenvalue in the Dirichlet spectrum");
  Eigen::MatrixXd residual = A.entries * K.psi - K.psi * K.mu.asDiagonal();
  for (int k = 0; k < count; ++k) {
    double res = residual.col(k).norm();
    if (res > 1e-8 * K.psi.col(k).norm())
      throw EigFailure("eigenpair residual " + std::to_string(res) + " exceeds 1e-8");
  }

  if (K.psi.col(0).sum() < 0.0) K.psi.col(0) = -K.psi.col(0);
  if (K.psi.col(0).minCoeff() <= 0.0)
    throw EigFailure("ground state is not strictly positive on the interior");
  K.lambda1 = K.mu[0];
  K.phi1 = K.psi.col(0) / std::sqrt(A.grid->cell_volume());
  return K;
}

double KernelBundle::kernel_entry(int i, int j, double t) const {
  double acc = 0.0;
  for (int k = 0; k < count(); ++k) acc += std::exp(-mu[k] * t) * psi(i, k) * psi(j, k);
  return acc / grid().cell_volume();
}

Eigen::VectorXd KernelBundle::kernel_row(int i, double t) const {
  Eigen::VectorXd w = (-t * mu.array()).exp().matrix().asDiagonal() * psi.row(i).transpose();
  return psi * w / grid().cell_volume();
}

Eigen::VectorXd KernelBundle::evolve(const Eigen::VectorXd& u0, double t) const {
  Eigen::VectorXd c = psi.transpose() * u0;
  c.array() *= (-t * mu.array()).exp();
  return psi * c;
}

double KernelBundle::mass_time_integral(int i, double t) const {
  double acc = 0.0;
  for (int k = 0; k < count(); ++k) {
    double sk = psi.col(k).sum();
    acc += psi(i, k) * sk * (1.0 - std::exp(-mu[k] * t)) / mu[k];
  }
  return acc;
}

KernelSlice kernel_slice(const KernelBundle& K, double t) {
  if (!(t > 0.0)) throw NonPositiveTime("kernel slice needs t > 0");
  KernelSlice s;
  s.t = t;
  Eigen::MatrixXd half = K.psi * (-0.5 * t * K.mu.array()).exp().matrix().asDiagonal();
  s.P = half * half.transpose() / K.grid().cell_volume();
  return s;
}

double reference_profile_h(const Point& x, double t, double s, int dim) {
  double r = std::hypot(x[0], x[1]);
  return t / std::pow(std::pow(t, 1.0 / (2.0 * s)) + r, dim + 2.0 * s);
}

double kernel_rhs_green1(const DomainGrid& grid, double s, int i, int j, double t) {
  const double sqt = std::sqrt(t);
  const double bx = std::min(1.0, std::pow(grid.delta(i), s) / sqt);
  const double by = std::min(1.0, std::pow(grid.delta(j), s) / sqt);
  const auto& xi = grid.node(i);
  const auto& xj = grid.node(j);
  const double r = std::hypot(xi[0] - xj[0], xi[1] - xj[1]);
  const double space = std::min(std::pow(t, -grid.dim() / (2.0 * s)),
                                t / std::pow(r, grid.dim() + 2.0 * s));
  return bx * by * space;
}

namespace {
std::vector<int> admissible_nodes(const DomainGrid& grid, double min_delta) {
  std::vector<int> ids;
  for (int i = 0; i < grid.node_count(); ++i)
    if (grid.delta(i) >= min_delta) ids.push_back(i);
  return ids;
}
}  // namespace

ComparisonProfile validate_kernel_bounds(const KernelBundle& K, const std::vector<double>& times,
                                         int sample_pairs, std::uint64_t seed) {
  const DomainGrid& grid = K.grid();
  const double s = K.op->params.s;
  const double tmax = std::pow(grid.diameter(), 2.0 * s);
  for (double t : times)
    if (!(t > 0.0 && t <= tmax))
      throw InvalidParams("kernel bound times must lie in (0, diam^{2s}]");

  auto ids = admissible_nodes(grid, 2.0 * grid.h());
  if (ids.size() < 2 || times.empty() || sample_pairs < 8)
    throw InsufficientSamples("need at least 8 pairs and one time");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, ids.size() - 1);

  ComparisonProfile prof;
  prof.c_low = std::numeric_limits<double>::infinity();
  prof.c_high = 0.0;
  for (double t : times) {
    for (int q = 0; q < sample_pairs; ++q) {
      int i = ids[pick(rng)];
      int j = ids[pick(rng)];
      double p = K.kernel_entry(i, j, t);
      double rhs = kernel_rhs_green1(grid, s, i, j, t);
      double ratio = p / rhs;
      prof.c_low = std::min(prof.c_low, ratio);
      prof.c_high = std::max(prof.c_high, ratio);
      if (static_cast<int>(prof.samples.size()) < 64 * static_cast<int>(times.size()))
        prof.samples.push_back({t, i, j, p, rhs, ratio});
    }
  }
  if (!(prof.c_low > 0.0) || !std::isfinite(prof.c_high))
    throw InsufficientSamples("kernel/reference ratio degenerate on the sample set");
  return prof;
}

GradientBoundReport kernel_gradient_bound(const KernelBundle& K,
                                          const std::vector<double>& times) {
  const DomainGrid& grid = K.grid();
  const double s = K.op->params.s;
  GradientBoundReport rep;
  for (double t : times) {
    if (!(t > 0.0)) throw NonPositiveTime("kernel gradient bound needs t > 0");
    KernelSlice slice = kernel_slice(K, t);
    const double tpow = std::pow(t, 1.0 / (2.0 * s));
    for (int j = 0; j < grid.node_count(); j += std::max(1, grid.node_count() / 64)) {
      Eigen::VectorXd col = slice.P.col(j);
      Eigen::VectorXd gmag = gradient_magnitude(grid, col, GradientMode::OneSidedAtBoundary);
      for (int i = 0; i < grid.node_count(); ++i) {
        if (grid.delta(i) < 2.0 * grid.h()) continue;
        double p = col[i];
        if (p <= 1e-12) continue;
        double denom = std::min(grid.delta(i), tpow);
        double c = gmag[i] * denom / p;
        rep.c_fit = std::max(rep.c_fit, c);
        ++rep.samples;
      }
    }
  }
  return rep;
}

Eigen::MatrixXd green_function(const KernelBundle& K) {
  if (!K.complete()) throw SingularOperator("green function needs the full eigendecomposition");
  if (K.mu[0] <= 0.0) throw SingularOperator("operator not positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt(K.op->entries);
  if (llt.info() != Eigen::Success) throw SingularOperator("Cholesky factorization failed");
  Eigen::MatrixXd G =
      llt.solve(Eigen::MatrixXd::Identity(K.op->size(), K.op->size()));
  G = 0.5 * (G + G.transpose());  // symmetrize roundoff
  return G / K.grid().cell_volume();
}

Eigen::VectorXd green_apply(const DomainGrid& grid, const Eigen::MatrixXd& G,
                            const Eigen::VectorXd& f) {
  return G * f * grid.cell_volume();
}

double green_rhs(const DomainGrid& grid, double s, int i, int j) {
  const auto& xi = grid.node(i);
  const auto& xj = grid.node(j);
  const double r = std::hypot(xi[0] - xj[0], xi[1] - xj[1]);
  const double bx = std::min(std::pow(grid.delta(i), s) / std::pow(r, s), 1.0);
  const double by = std::min(std::pow(grid.delta(j), s) / std::pow(r, s), 1.0);
  return bx * by / std::pow(r, grid.dim() - 2.0 * s);
}

GreenBoundReport validate_green_bounds(const Eigen::MatrixXd& G, const DomainGrid& grid,
                                       const FracParams& params, int sample_pairs,
                                       std::uint64_t seed) {
  if (grid.dim() <= 2.0 * params.s)
    throw DimensionTooSmall("green bounds need N > 2s for the |x-y|^{N-2s} normalization");
  auto ids = admissible_nodes(grid, 2.0 * grid.h());
  if (ids.size() < 2 || sample_pairs < 8) throw InsufficientSamples("need at least 8 pairs");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, ids.size() - 1);

  GreenBoundReport rep;
  rep.c_low = std::numeric_limits<double>::infinity();
  int found = 0, attempts = 0;
  while (found < sample_pairs && attempts < 50 * sample_pairs) {
    ++attempts;
    int i = ids[pick(rng)];
    int j = ids[pick(rng)];
    const auto& xi = grid.node(i);
    const auto& xj = grid.node(j);
    if (std::hypot(xi[0] - xj[0], xi[1] - xj[1]) < 2.0 * grid.h()) continue;
    double ratio = G(i, j) / green_rhs(grid, params.s, i, j);
    rep.c_low = std::min(rep.c_low, ratio);
    rep.c_high = std::max(rep.c_high, ratio);
    ++found;
  }
  rep.samples = found;
  if (found < sample_pairs || !(rep.c_low > 0.0))
    throw InsufficientSamples("green ratio degenerate or too few separated pairs");
  return rep;
}

double mass_integral_constant(const KernelBundle& K, double t) {
  const DomainGrid& grid = K.grid();
  const double s = K.op->params.s;
  double c = 0.0;
  for (int i = 0; i < grid.node_count(); ++i) {
    double mass = K.mass_time_integral(i, t);
    c = std::max(c, mass / std::pow(grid.delta(i), s));
  }
  return c;
}

}  // namespace fkpz
