#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fkpz/fraclap.hpp"

namespace fkpz {

// Spectral data of the discrete operator. Eigenvectors are orthonormal in
// the plain (unweighted) vector sense; the heat kernel density therefore
// carries an explicit 1/cell-volume. phi1 is the continuum-normalized,
// sign-fixed positive ground state.
struct KernelBundle {
  const OperatorMatrix* op = nullptr;
  Eigen::VectorXd mu;   // ascending, all positive
  Eigen::MatrixXd psi;  // columns, orthonormal
  double lambda1 = 0.0;
  Eigen::VectorXd phi1;

  const DomainGrid& grid() const { return *op->grid; }
  int count() const { return static_cast<int>(mu.size()); }
  bool complete() const { return count() == grid().node_count(); }

  // P_Omega(x_i, y_j, t), density units (1/volume).
  double kernel_entry(int i, int j, double t) const;
  Eigen::VectorXd kernel_row(int i, double t) const;

  // Heat semigroup applied to node values: u(t) = integral of P(t) u0.
  Eigen::VectorXd evolve(const Eigen::VectorXd& u0, double t) const;

  // Integral of P(x_i, y, sigma) over Omega x (0, t).
  double mass_time_integral(int i, double t) const;
};

KernelBundle eigendecompose(const OperatorMatrix& A, int count);

struct KernelSlice {
  double t = 0.0;
  Eigen::MatrixXd P;  // symmetric, nonnegative, sub-Markov rows
};

KernelSlice kernel_slice(const KernelBundle& K, double t);

struct KernelBoundSample {
  double t = 0.0;
  int x_index = 0;
  int y_index = 0;
  double p = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

// Two-sided comparison of the discrete kernel against the reference
// profile (1 ^ d^s(x)/sqrt t)(1 ^ d^s(y)/sqrt t)(t^{-N/2s} ^ t/|x-y|^{N+2s})
// over sampled node pairs with delta >= 2h.
struct ComparisonProfile {
  double c_low = 0.0;
  double c_high = 0.0;
  double spread() const { return c_high / c_low; }
  std::vector<KernelBoundSample> samples;
};

double kernel_rhs_green1(const DomainGrid& grid, double s, int i, int j, double t);
double reference_profile_h(const Point& x, double t, double s, int dim);

ComparisonProfile validate_kernel_bounds(const KernelBundle& K, const std::vector<double>& times,
                                         int sample_pairs, std::uint64_t seed = 1234);

struct GradientBoundReport {
  double c_fit = 0.0;  // smallest C with |grad P| <= C P / (delta ^ t^{1/2s})
  int samples = 0;
};

GradientBoundReport kernel_gradient_bound(const KernelBundle& K, const std::vector<double>& times);

// Green function density: matching A^{-1} against the time-integrated kernel.
Eigen::MatrixXd green_function(const KernelBundle& K);
Eigen::VectorXd green_apply(const DomainGrid& grid, const Eigen::MatrixXd& G,
                            const Eigen::VectorXd& f);

struct GreenBoundReport {
  double c_low = 0.0;
  double c_high = 0.0;
  double spread() const { return c_high / c_low; }
  int samples = 0;
};

double green_rhs(const DomainGrid& grid, double s, int i, int j);

GreenBoundReport validate_green_bounds(const Eigen::MatrixXd& G, const DomainGrid& grid,
                                       const FracParams& params, int sample_pairs,
                                       std::uint64_t seed = 1234);

// Fitted constant in  iint_{Omega x (0,t)} P(x, y, sigma) dy dsigma <= C delta^s(x).
double mass_integral_constant(const KernelBundle& K, double t);

}  // namespace fkpz
