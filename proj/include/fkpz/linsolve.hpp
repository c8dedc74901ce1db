#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fkpz/diagnostics.hpp"
#include "fkpz/heatkernel.hpp"

namespace fkpz {

using SourceFn = std::function<double(const Point&, double)>;

// u_t + (-Delta)^s u = f, u(0) = u0, exterior zero; data-class tags drive the
// admissibility flags of the regularity report.
struct LinearProblem {
  const KernelBundle* bundle = nullptr;
  SourceFn source;  // empty means f == 0
  Field u0;
  double T = 1.0;
  double m = 1.0;                // f in L^m(Omega_T)
  double rho = 1.0;              // u0 in L^rho(Omega)
  std::optional<double> beta;    // weighted mode: f delta^beta in L^1

  const DomainGrid& grid() const { return bundle->grid(); }
  double s() const { return bundle->op->params.s; }
  void validate() const;
  Eigen::VectorXd source_at(double t) const;
};

std::vector<double> uniform_times(double T, int levels);

SpaceTimeField solve_duhamel(const LinearProblem& P, const std::vector<double>& times);
SpaceTimeField solve_imex(const LinearProblem& P, double dt);

struct DecayStudy {
  ExponentFit fit;
  double predicted = 0.0;
  std::vector<double> times;
  std::vector<double> norms;
};

// Slope of log ||u(t)||_{L^r} for the source-free evolution of u0 against
// the smoothing exponent -(N/2s)(1/rho - 1/r). r may be +infinity.
DecayStudy decay_study(const LinearProblem& P, double rho, double r,
                       const std::vector<double>& times);

struct NormEntry {
  std::string name;
  double exponent = 0.0;
  double value = 0.0;
  bool admissible = false;
};

struct RegularityReport {
  double m = 1.0;
  double u_norm_m = 0.0;
  std::vector<NormEntry> gradient;          // ||grad u||_{L^q}
  std::vector<NormEntry> hardy;             // ||u/delta^s||_{L^theta}
  std::vector<NormEntry> weighted_gradient; // || |grad u| delta^{1-s} ||_{L^p}
  std::vector<NormEntry> sobolev;           // Gagliardo L^q(0,T;W^{s,q})
  double gradient_frontier = 0.0;           // default (N+2s)/(N+1), shifted under beta
};

RegularityReport regularity_report(const SpaceTimeField& u, const LinearProblem& P,
                                   const std::vector<double>& q_grid,
                                   const std::vector<double>& theta_grid = {},
                                   const std::vector<double>& p_grid = {},
                                   const std::vector<double>& sobolev_grid = {});

// || |grad u| delta^w ||_{L^p(Omega_T)}
double weighted_gradient_norm(const SpaceTimeField& u, double p, double w);
double weighted_gradient_norm(const Field& u, double p, double w);

Field truncate(const Field& u, double k);

struct WeightedSolve {
  SpaceTimeField u;
  RegularityReport report;
};

// IMEX solve for data with f delta^beta in L^1 only; the admissible gradient
// frontier shifts from (N+2s)/(N+1) to (N+2s)/(N+beta+1).
WeightedSolve solve_weighted_data(const LinearProblem& P, double dt,
                                  const std::vector<double>& q_grid);

// Max positive violation of the convexity inequality for v = phi(u) with the
// discrete time derivative; exact in space for the M-matrix operator, so the
// violation is the time-discretization error.
double kato_check(const SpaceTimeField& u, const LinearProblem& P,
                  const std::function<double(double)>& phi,
                  const std::function<double(double)>& dphi);

// Fitted constant in the time-sliced gradient bound
//   (int |grad u(x,t)|^q dx)^{1/q} <= C int_0^t int |f| (t-sigma)^{ghat-eta}
// with ghat = N/2s - q(N+1)/2s; eta = 0.05 is the representative loss.
double time_sliced_gradient_constant(const SpaceTimeField& u, const LinearProblem& P,
                                     double q, double eta = 0.05);

}  // namespace fkpz
