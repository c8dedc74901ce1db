#pragma once

#include <optional>

#include "fkpz/linsolve.hpp"

namespace fkpz {

enum class AlphaRegime { SubcriticalL1, Intermediate, UnknownWindow, Nonexistence };

std::string regime_name(AlphaRegime r);

// Threshold exponents in alpha: existence below (N+2s)/(N+1) for L^1 data,
// weighted constructions up to s/(1-s), nonexistence above 1/(1-s).
struct AlphaThresholds {
  double subcritical = 0.0;  // (N+2s)/(N+1)
  double weighted = 0.0;     // s/(1-s)
  double nonexistence = 0.0; // 1/(1-s)
};

AlphaThresholds alpha_thresholds(int dim, double s);
AlphaRegime classify_alpha(double alpha, int dim, double s);

struct KpzProblem {
  const KernelBundle* bundle = nullptr;
  double alpha = 2.0;
  SourceFn source;  // empty means f == 0
  Field u0;
  double T = 1.0;
  double m = 1.0;
  bool weight_mode = false;  // track || grad(u delta^{1-s}) ||_{L^{m alpha}}

  const DomainGrid& grid() const { return bundle->grid(); }
  double s() const { return bundle->op->params.s; }
  AlphaRegime regime() const { return classify_alpha(alpha, grid().dim(), s()); }
  void validate() const;
  LinearProblem linear(SourceFn f) const;
};

// Norm-ball exponent for the fixed-point set: midpoint of (alpha, (N+2s)/(N+1))
// below the subcritical threshold; midpoint of (m alpha, ceiling) in the
// intermediate range, with ceiling 1/(1-s) for m >= (N+2s)/(2s-1) and
// m(N+2s)/((N+2s)(m(1-s)+1) - m(2s-1)) below it.
double ball_exponent(const KpzProblem& P);

enum class IterationStatus { Converged, Diverged, MaxIterExceeded };

struct FixedPointState {
  IterationStatus status = IterationStatus::MaxIterExceeded;
  int iterations = 0;
  std::vector<double> residuals;       // sup-t L1 residual per iteration
  double ball_r = 0.0;                 // exponent of the norm ball E_r
  double ball_l = 0.0;                 // radius parameter l, bound is l^{1/alpha}
  std::vector<double> e_r_norms;       // ||v_n||_{E_r} per iterate
  bool ball_declared = false;
  bool all_in_ball = false;
  double weighted_norm = 0.0;          // || grad(u delta^{1-s}) ||_{L^{m alpha}}, weight mode
};

struct PicardResult {
  SpaceTimeField u;
  FixedPointState state;
};

// Damped iteration of the mild-solution map v -> Duhamel(|grad v|^alpha + f).
PicardResult picard_solve(const KpzProblem& P, double tol, int max_iter,
                          double omega = 0.5, int time_levels = 32);

// Horizon selection for the norm-ball construction: halve T until the linear
// constant admits l with C (data + l) <= l^{1/alpha} and every iterate stays
// inside the declared ball.
struct BallSelection {
  double T = 0.0;
  double l = 0.0;
  double r = 0.0;
  PicardResult result;
};
BallSelection select_horizon_for_ball(const KpzProblem& P, double tol, int max_iter,
                                      int max_halvings = 8, int time_levels = 32);

// IMEX for the bounded regularization |grad u|^alpha / (a + |grad u|^alpha) + f.
SpaceTimeField regularized_solve(const KpzProblem& P, double a, double dt);

struct MonotoneAudit {
  std::vector<int> n_values;
  std::vector<double> l1_gaps;        // L1(Omega_T) gap between consecutive iterates
  double max_violation = 0.0;         // worst nodewise decrease between iterates
  bool minimal_candidate = false;
};

struct MonotoneResult {
  SpaceTimeField u;
  MonotoneAudit audit;
};

// Increasing approximations with a = 1/n and truncated data T_n(f), T_n(u0).
MonotoneResult monotone_limit_solve(const KpzProblem& P, const std::vector<int>& n_seq,
                                    double dt, double gap_tol = 1e-3);

struct DriftProblem {
  const KernelBundle* bundle = nullptr;
  std::function<std::array<double, 2>(const Point&, double)> B;
  SourceFn source;
  Field u0;
  double T = 1.0;
  double m = std::numeric_limits<double>::infinity();  // B in (L^m)^N

  const DomainGrid& grid() const { return bundle->grid(); }
  bool uniqueness_regime() const;
  void validate() const;
};

// IMEX with the drift term explicit and upwinded; the CFL guard
// dt <= h / (2 max|B|) keeps the explicit part nonnegative.
SpaceTimeField drift_solve(const DriftProblem& D, double dt);

// Fixed-point form of the drift problem (frozen-gradient source) used for the
// uniqueness experiments; v_init seeds the iteration.
SpaceTimeField drift_fixed_point(const DriftProblem& D, double dt, const Field& v_init,
                                 double tol, int max_iter);

struct OrderingReport {
  double max_violation = 0.0;  // max positive part of w1 - w2
};

// Solves the regularized problem with ordered data pairs and reports the
// worst violation of w1 <= w2.
OrderingReport comparison_experiment(const KpzProblem& base, const SourceFn& f1, const Field& u01,
                                     const SourceFn& f2, const Field& u02, double a, double dt);

struct BlowupReport {
  std::vector<double> times;
  std::vector<double> Y;          // integral of u phi1
  std::vector<double> residual;   // discrete Y' + lambda1 Y - <g, phi1>
  double c_hat = 0.0;             // fitted minorant constant
  double lambda1 = 0.0;
  double threshold = 0.0;         // Y* with c_hat Y*^{alpha-1} = lambda1
  bool threshold_crossed = false;
  bool blowup = false;
  int flag_index = -1;
};

BlowupReport blowup_monitor(const SpaceTimeField& u, const KernelBundle& K, double alpha,
                            const SourceFn& f, bool include_nonlinearity = true);

struct KpzRunResult {
  SpaceTimeField u;
  BlowupReport monitor;
  bool completed = false;  // false when terminated early by the blow-up flag
};

// Direct IMEX for the full problem with the blow-up monitor running inline;
// terminates once the flag is raised or the iterate leaves double range.
KpzRunResult kpz_imex_solve(const KpzProblem& P, double dt, bool monitor_blowup = true);

}  // namespace fkpz
