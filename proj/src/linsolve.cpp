#include "fkpz/linsolve.hpp"

#include <algorithm>
#include <cmath>

namespace fkpz {

void LinearProblem::validate() const {
  if (!bundle) throw InvalidParams("linear problem needs a kernel bundle");
  if (!(T > 0.0)) throw InvalidParams("horizon T must be positive");
  if (m < 1.0 || rho < 1.0) throw InvalidParams("data-class exponents must be >= 1");
  if (u0.grid != &grid()) throw GridMismatch("u0 lives on a different grid");
  if (beta && !(*beta < 2.0 * s() - 1.0))
    throw WeightOutOfRange("beta must satisfy beta < 2s - 1");
}

Eigen::VectorXd LinearProblem::source_at(double t) const {
  const DomainGrid& g = grid();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(g.node_count());
  if (source)
    for (int i = 0; i < g.node_count(); ++i) {
      f[i] = source(g.node(i), t);
      if (!std::isfinite(f[i]))
        throw NonFiniteSample("source non-finite at node " + std::to_string(i));
    }
  return f;
}

std::vector<double> uniform_times(double T, int levels) {
  std::vector<double> ts(levels + 1);
  for (int j = 0; j <= levels; ++j) ts[j] = T * j / levels;
  ts.back() = T;
  return ts;
}

SpaceTimeField solve_duhamel(const LinearProblem& P, const std::vector<double>& times) {
  P.validate();
  if (times.size() < 2 || times.front() != 0.0)
    throw InvalidParams("duhamel time grid must start at 0");
  for (size_t j = 1; j < times.size(); ++j) {
    if (!(times[j] > times[j - 1])) throw InvalidParams("time grid must increase");
    if (times[j] > P.T * (1.0 + 1e-12)) throw InvalidParams("time grid exceeds the horizon");
  }
  if (static_cast<int>(times.size()) - 1 < 16)
    throw TimeGridTooCoarse("need at least 16 quadrature intervals");

  const KernelBundle& K = *P.bundle;
  const int M = static_cast<int>(times.size()) - 1;
  const int nmodes = K.count();

  // Spectral coefficients of u0 and of the source at interval midpoints.
  Eigen::VectorXd c0 = K.psi.transpose() * P.u0.values;
  Eigen::MatrixXd cf(nmodes, M);
  std::vector<double> mids(M), widths(M);
  for (int k = 0; k < M; ++k) {
    mids[k] = 0.5 * (times[k] + times[k + 1]);
    widths[k] = times[k + 1] - times[k];
    cf.col(k) = P.source ? (K.psi.transpose() * P.source_at(mids[k])).eval()
                         : Eigen::VectorXd::Zero(nmodes).eval();
  }

  SpaceTimeField u;
  u.grid = &K.grid();
  u.times = times;
  u.levels.resize(times.size());
  for (size_t j = 0; j < times.size(); ++j) {
    Eigen::VectorXd coef(nmodes);
    const double t = times[j];
    for (int i = 0; i < nmodes; ++i) {
      double acc = std::exp(-K.mu[i] * t) * c0[i];
      for (int k = 0; k < static_cast<int>(j); ++k)
        acc += std::exp(-K.mu[i] * (t - mids[k])) * cf(i, k) * widths[k];
      coef[i] = acc;
    }
    u.levels[j] = K.psi * coef;
  }
  return u;
}

SpaceTimeField solve_imex(const LinearProblem& P, double dt) {
  P.validate();
  if (!(dt > 0.0)) throw InvalidParams("dt must be positive");
  const KernelBundle& K = *P.bundle;
  const int steps = std::max(1, static_cast<int>(std::lround(P.T / dt)));
  const double step = P.T / steps;

  const int n = K.grid().node_count();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + step * K.op->entries;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw LinearSolveFailure("implicit step not SPD");

  SpaceTimeField u;
  u.grid = &K.grid();
  u.times.resize(steps + 1);
  u.levels.resize(steps + 1);
  u.times[0] = 0.0;
  u.levels[0] = P.u0.values;
  Eigen::VectorXd cur = P.u0.values;
  for (int nstep = 0; nstep < steps; ++nstep) {
    Eigen::VectorXd rhs = cur;
    if (P.source) rhs += step * P.source_at(nstep * step);
    cur = llt.solve(rhs);
    if (!cur.allFinite()) throw LinearSolveFailure("non-finite iterate");
    u.times[nstep + 1] = (nstep + 1) * step;
    u.levels[nstep + 1] = cur;
  }
  u.times.back() = P.T;
  return u;
}

namespace {
double lebesgue_norm_level(const DomainGrid& g, const Eigen::VectorXd& v, double r) {
  if (std::isinf(r)) return v.cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), r);
  return std::pow(acc * g.cell_volume(), 1.0 / r);
}
}  // namespace

DecayStudy decay_study(const LinearProblem& P, double rho, double r,
                       const std::vector<double>& times) {
  P.validate();
  if (P.source) throw InvalidParams("decay study expects a source-free problem");
  if (!(r >= rho && rho >= 1.0)) throw InvalidParams("need r >= rho >= 1");
  if (times.size() < 4 || times.back() < 4.0 * times.front())
    throw WindowTooNarrow("need >= 4 times spanning at least a factor 4");

  const KernelBundle& K = *P.bundle;
  DecayStudy out;
  out.times = times;
  const int dim = K.grid().dim();
  out.predicted = -(dim / (2.0 * P.s())) * (1.0 / rho - 1.0 / r);
  for (double t : times) {
    if (!(t > 0.0)) throw NonPositiveTime("decay study times must be positive");
    out.norms.push_back(lebesgue_norm_level(K.grid(), K.evolve(P.u0.values, t), r));
  }
  out.fit = fit_loglog(times, out.norms);
  return out;
}

double weighted_gradient_norm(const Field& u, double p, double w) {
  const DomainGrid& g = *u.grid;
  Eigen::VectorXd gm = gradient_magnitude(g, u.values);
  double acc = 0.0;
  for (int i = 0; i < g.node_count(); ++i)
    acc += std::pow(gm[i], p) * std::pow(g.delta(i), w * p);
  return std::pow(acc * g.cell_volume(), 1.0 / p);
}

double weighted_gradient_norm(const SpaceTimeField& u, double p, double w) {
  const DomainGrid& g = *u.grid;
  double acc = 0.0;
  std::vector<double> level(u.level_count());
  for (int j = 0; j < u.level_count(); ++j) {
    Eigen::VectorXd gm = gradient_magnitude(g, u.levels[j]);
    double s = 0.0;
    for (int i = 0; i < g.node_count(); ++i)
      s += std::pow(gm[i], p) * std::pow(g.delta(i), w * p);
    level[j] = s * g.cell_volume();
  }
  for (int j = 0; j + 1 < u.level_count(); ++j)
    acc += 0.5 * (level[j] + level[j + 1]) * (u.times[j + 1] - u.times[j]);
  return std::pow(acc, 1.0 / p);
}

namespace {
// Strict-inequality admissibility with a 1% guard band.
bool admissible(double value, double frontier) { return value < 0.99 * frontier; }

double hardy_frontier(double m, int N, double s) {
  if (m >= (N + 2.0 * s) / s) return std::numeric_limits<double>::infinity();
  return m * (N + 2.0 * s) / (N + 2.0 * s - m * s);
}

double weighted_grad_frontier(double m, int N, double s) {
  if (m >= (N + 2.0 * s) / (2.0 * s - 1.0)) return std::numeric_limits<double>::infinity();
  return m * (N + 2.0 * s) / (N + 2.0 * s - m * (2.0 * s - 1.0));
}
}  // namespace

RegularityReport regularity_report(const SpaceTimeField& u, const LinearProblem& P,
                                   const std::vector<double>& q_grid,
                                   const std::vector<double>& theta_grid,
                                   const std::vector<double>& p_grid,
                                   const std::vector<double>& sobolev_grid) {
  u.validate();
  const int N = P.grid().dim();
  const double s = P.s();
  RegularityReport rep;
  rep.m = P.m;
  rep.u_norm_m = norm(u, {NormKind::Lebesgue, P.m});
  rep.gradient_frontier = (N + 2.0 * s) / (N + 1.0 + P.beta.value_or(0.0));
  for (double q : q_grid) {
    NormEntry e{"grad_Lq", q, norm(u, {NormKind::Bochner, q}), admissible(q, rep.gradient_frontier)};
    rep.gradient.push_back(e);
  }
  for (double theta : theta_grid) {
    NormSpec spec{NormKind::Weighted, theta, -s * theta};
    NormEntry e{"u_over_deltas_Ltheta", theta, norm(u, spec),
                admissible(theta, hardy_frontier(P.m, N, s))};
    rep.hardy.push_back(e);
  }
  for (double p : p_grid) {
    NormEntry e{"grad_delta1ms_Lp", p, weighted_gradient_norm(u, p, 1.0 - s),
                admissible(p, weighted_grad_frontier(P.m, N, s))};
    rep.weighted_gradient.push_back(e);
  }
  for (double q : sobolev_grid) {
    NormSpec spec{NormKind::Gagliardo, q};
    spec.s = s;
    NormEntry e{"gagliardo_Lq", q, norm(u, spec), admissible(q, (N + 2.0 * s) / (N + s))};
    rep.sobolev.push_back(e);
  }
  return rep;
}

Field truncate(const Field& u, double k) {
  if (!(k > 0.0)) throw NonPositiveK("truncation level must be positive");
  return Field(*u.grid, u.values.cwiseMax(-k).cwiseMin(k));
}

WeightedSolve solve_weighted_data(const LinearProblem& P, double dt,
                                  const std::vector<double>& q_grid) {
  if (!P.beta) throw WeightOutOfRange("weighted solve needs the beta tag");
  P.validate();
  WeightedSolve out;
  out.u = solve_imex(P, dt);
  out.report = regularity_report(out.u, P, q_grid);
  return out;
}

double kato_check(const SpaceTimeField& u, const LinearProblem& P,
                  const std::function<double(double)>& phi,
                  const std::function<double(double)>& dphi) {
  u.validate();
  // Convexity probe of phi on the realized value range.
  double lo = 0.0, hi = 0.0;
  for (const auto& lvl : u.levels) {
    lo = std::min(lo, lvl.minCoeff());
    hi = std::max(hi, lvl.maxCoeff());
  }
  if (hi - lo < 1.0) {
    lo -= 0.5;
    hi += 0.5;
  }
  const int probes = 64;
  double step = (hi - lo) / probes;
  for (int i = 0; i + 1 < probes; ++i) {
    double d2 = dphi(lo + (i + 1) * step) - dphi(lo + i * step);
    if (d2 < -1e-10 * std::max(1.0, std::abs(dphi(hi))))
      throw NonConvexPhi("phi'' < 0 detected on the sampled range");
  }

  const Eigen::MatrixXd& A = P.bundle->op->entries;
  double worst = 0.0;
  for (int j = 0; j + 1 < u.level_count(); ++j) {
    const double dt = u.times[j + 1] - u.times[j];
    const Eigen::VectorXd& un = u.levels[j];
    const Eigen::VectorXd& un1 = u.levels[j + 1];
    Eigen::VectorXd vn = un.unaryExpr(phi);
    Eigen::VectorXd vn1 = un1.unaryExpr(phi);
    Eigen::VectorXd Au = A * un;
    Eigen::VectorXd Av = A * vn;
    for (int i = 0; i < un.size(); ++i) {
      double lhs = (vn1[i] - vn[i]) / dt + Av[i];
      double rhs = dphi(un[i]) * ((un1[i] - un[i]) / dt + Au[i]);
      worst = std::max(worst, lhs - rhs);
    }
  }
  return worst;
}

double time_sliced_gradient_constant(const SpaceTimeField& u, const LinearProblem& P,
                                     double q, double eta) {
  u.validate();
  if (!P.source) throw InvalidParams("time-sliced bound needs a source");
  const DomainGrid& g = P.grid();
  const int N = g.dim();
  const double s = P.s();
  if (!(q > 1.0 && q < (N + 2.0 * s) / (N + 1.0)))
    throw ExponentOutOfRange("time-sliced bound needs 1 < q < (N+2s)/(N+1)");
  const double ghat = N / (2.0 * s) - q * (N + 1.0) / (2.0 * s);

  double c_fit = 0.0;
  for (int j = 1; j < u.level_count(); ++j) {
    const double t = u.times[j];
    Eigen::VectorXd gm = gradient_magnitude(g, u.levels[j]);
    double lhs = 0.0;
    for (int i = 0; i < g.node_count(); ++i) lhs += std::pow(gm[i], q);
    lhs = std::pow(lhs * g.cell_volume(), 1.0 / q);
    // Midpoint rule in sigma for the weakly singular weight.
    double rhs = 0.0;
    for (int k = 0; k < j; ++k) {
      double mid = 0.5 * (u.times[k] + u.times[k + 1]);
      double width = u.times[k + 1] - u.times[k];
      double fmass = 0.0;
      for (int i = 0; i < g.node_count(); ++i)
        fmass += std::abs(P.source(g.node(i), mid));
      rhs += fmass * g.cell_volume() * std::pow(t - mid, ghat - eta) * width;
    }
    if (rhs > 0.0) c_fit = std::max(c_fit, lhs / rhs);
  }
  return c_fit;
}

}  // namespace fkpz
