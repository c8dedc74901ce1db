#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "fkpz/grid.hpp"

namespace fkpz {

// Two normalizations are exposed. FourierSymbol makes the principal-value
// operator match the multiplier |xi|^{2s} (cross-check: N=1, s=1/2 gives
// 1/pi); PaperHalf is the Gamma-function constant
// 2^{2s-1} pi^{-N/2} Gamma((N+2s)/2)/|Gamma(-s)|, exactly half of it.
enum class Convention { FourierSymbol, PaperHalf };

std::string convention_name(Convention c);
Convention convention_from_name(const std::string& name);

struct FracParams {
  double s = 0.75;
  int dim = 2;
  Convention convention = Convention::FourierSymbol;

  double a_norm() const;  // normalization constant for the chosen convention
  // Operator assembly and every parabolic experiment require s in (1/2, 1);
  // the constant itself is defined on all of (0, 1).
  void validate_for_operator() const;
};

double normalization_constant(double s, int dim, Convention convention);

// Integral of |d|^p over the h-cell centered at the origin; needs p > -dim.
double cell_integral_abs_power(int dim, double h, double p);

// Integral of |xi|^{-dim-2s} over the h-cell centered at lattice offset d
// (offset in units of h, d != 0). The kernel is integrated exactly so the
// quadrature error comes from the field alone.
double kernel_cell_weight(int dim, double h, int di, int dj, double s);

// Second moment of the kernel over the singular cell plus its first ring,
// used by the Taylor cancellation of the near field.
double near_block_second_moment(int dim, double h, double s);

// Dense symmetric discretization of the restricted fractional Laplacian with
// exterior Dirichlet condition. Off-diagonal entries are nonpositive, the
// diagonal is positive and absorbs the exterior-zero region (per-node tail).
struct OperatorMatrix {
  const DomainGrid* grid = nullptr;
  FracParams params;
  Eigen::MatrixXd entries;  // units 1/time
  Eigen::VectorXd tail;     // diagonal share coming from the exterior

  int size() const { return static_cast<int>(entries.rows()); }
};

// Hard cap for the dense storage: the kernel is global, so rows are full.
inline constexpr int kMaxDenseNodes = 5000;

OperatorMatrix assemble(const DomainGrid& grid, const FracParams& params);

Field apply(const OperatorMatrix& A, const Field& u);

struct SymbolSample {
  std::array<double, 2> k;
  double measured = 0.0;
  double exact = 0.0;
  double rel_err = 0.0;
};

// Eigenvalue of the translation-invariant quadrature stencil on mode k of a
// periodic lattice with `lattice_size` points per axis on [0, 2pi)^N,
// against the exact symbol |k|^{2s}.
std::vector<SymbolSample> symbol_calibration(const FracParams& params,
                                             const std::vector<std::array<double, 2>>& modes,
                                             int lattice_size);

// Binary dump: magic "FLAP", u32 version, u64 node count, then row-major f64.
void dump_operator(const OperatorMatrix& A, const std::string& path);
Eigen::MatrixXd load_operator_entries(const std::string& path);

}  // namespace fkpz
