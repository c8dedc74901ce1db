#include "fkpz/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "fkpz/fraclap.hpp"

namespace fkpz {

namespace {

Eigen::VectorXd truncated(const Eigen::VectorXd& v, const std::optional<double>& k) {
  if (!k) return v;
  return v.cwiseMax(-*k).cwiseMin(*k);
}

// Space-only value whose p-th power integrates one time level.
double level_power_integral(const DomainGrid& grid, const Eigen::VectorXd& values,
                            const NormSpec& spec) {
  const double cellvol = grid.cell_volume();
  Eigen::VectorXd v = truncated(values, spec.trunc);
  switch (spec.kind) {
    case NormKind::Lebesgue: {
      double acc = 0.0;
      for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), spec.p);
      return acc * cellvol;
    }
    case NormKind::Weighted: {
      double acc = 0.0;
      for (int i = 0; i < v.size(); ++i)
        acc += std::pow(std::abs(v[i]), spec.p) * std::pow(grid.delta(i), spec.weight);
      return acc * cellvol;
    }
    case NormKind::Bochner: {
      Eigen::VectorXd g = gradient_magnitude(grid, v);
      double acc = 0.0;
      for (int i = 0; i < g.size(); ++i) acc += std::pow(g[i], spec.p);
      return acc * cellvol;
    }
    case NormKind::Gagliardo: {
      // Double sum over interior pairs, the exterior-zero part folded into a
      // per-node weight, and the same singular-cell correction as the
      // operator quadrature (with exponent p(1-s) - N in place of 2 - N - 2s).
      const double q = spec.p;
      const double exponent = grid.dim() + q * spec.s;
      const int n = grid.node_count();
      const double h = grid.h();
      double acc = 0.0;
      // Exterior weights reuse the operator's mid-field + analytic tail.
      const double rext = grid.r_ext();
      const double tail_far =
          (grid.dim() == 1 ? 2.0 : 2.0 * 3.14159265358979323846) *
          std::pow(rext, grid.dim() - exponent) / (exponent - grid.dim());
      const int reach = static_cast<int>(std::floor(rext / h)) + 1;
      Eigen::VectorXd gmag = gradient_magnitude(grid, v);
      const double c_cell =
          cell_integral_abs_power(grid.dim(), h, q * (1.0 - spec.s) - grid.dim());
      for (int i = 0; i < n; ++i) {
        const auto& ci = grid.lattice_coord(i);
        double wext = tail_far;
        const int djlo = grid.dim() == 1 ? 0 : -reach;
        const int djhi = grid.dim() == 1 ? 0 : reach;
        for (int di = -reach; di <= reach; ++di)
          for (int dj = djlo; dj <= djhi; ++dj) {
            if (di == 0 && dj == 0) continue;
            double dist = h * std::sqrt(double(di) * di + double(dj) * dj);
            if (dist > rext) continue;
            double w = cellvol * std::pow(dist, -exponent);
            int j = grid.find(ci[0] + di, ci[1] + dj);
            if (j >= 0)
              acc += std::pow(std::abs(v[i] - v[j]), q) * w * cellvol;
            else
              wext += w;
          }
        // D_Omega covers both (x in, y out) and (x out, y in): factor 2.
        acc += 2.0 * std::pow(std::abs(v[i]), q) * wext * cellvol;
        acc += std::pow(gmag[i], q) * c_cell * cellvol;
      }
      return acc;
    }
  }
  return 0.0;
}

}  // namespace

double norm(const Field& u, const NormSpec& spec) {
  if (spec.p < 1.0) throw ExponentOutOfRange("norm exponent must be >= 1");
  return std::pow(level_power_integral(*u.grid, u.values, spec), 1.0 / spec.p);
}

double norm(const SpaceTimeField& u, const NormSpec& spec) {
  if (spec.p < 1.0) throw ExponentOutOfRange("norm exponent must be >= 1");
  // Trapezoid in time over the stored levels.
  double acc = 0.0;
  for (int j = 0; j + 1 < u.level_count(); ++j) {
    double a = level_power_integral(*u.grid, u.levels[j], spec);
    double b = level_power_integral(*u.grid, u.levels[j + 1], spec);
    acc += 0.5 * (a + b) * (u.times[j + 1] - u.times[j]);
  }
  return std::pow(acc, 1.0 / spec.p);
}

ExponentFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParams("fit needs matched points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw InvalidParams("degenerate abscissa in fit");
  ExponentFit f;
  f.points = n;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (int i = 0; i < n; ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

ExponentFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw InvalidParams("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_linear(lx, ly);
}

std::vector<Band> geometric_bands(const DomainGrid& grid) {
  std::vector<Band> bands;
  double lo = 2.0 * grid.h();
  double dmax = *std::max_element(grid.delta().begin(), grid.delta().end());
  while (lo < dmax) {
    bands.push_back({lo, 2.0 * lo});
    lo *= 2.0;
  }
  return bands;
}

BoundaryExponent boundary_exponent(const Field& u, const std::vector<Band>& bands) {
  if (bands.size() < 4) throw EmptyBand("need at least 4 bands");
  const DomainGrid& grid = *u.grid;
  BoundaryExponent out;
  std::vector<double> xs, ys;
  for (const auto& band : bands) {
    double slog_d = 0.0, slog_u = 0.0;
    int count = 0;
    for (int i = 0; i < grid.node_count(); ++i) {
      double d = grid.delta(i);
      if (d < band.lo || d >= band.hi) continue;
      if (!(u.values[i] > 0.0)) continue;  // log-average of a positive profile
      slog_d += std::log(d);
      slog_u += std::log(u.values[i]);
      ++count;
    }
    if (count < 5) throw EmptyBand("band [" + std::to_string(band.lo) + ", " +
                                   std::to_string(band.hi) + ") holds fewer than 5 usable nodes");
    BandRow row;
    row.band = band;
    row.nodes = count;
    row.mean_delta = std::exp(slog_d / count);
    row.mean_u = std::exp(slog_u / count);
    out.rows.push_back(row);
    xs.push_back(std::log(row.mean_delta));
    ys.push_back(std::log(row.mean_u));
  }
  out.fit = fit_linear(xs, ys);
  return out;
}

double hopf_check(const Field& u, double s) {
  const DomainGrid& grid = *u.grid;
  double c = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int i = 0; i < grid.node_count(); ++i) {
    if (grid.delta(i) < 2.0 * grid.h()) continue;
    c = std::min(c, u.values[i] / std::pow(grid.delta(i), s));
    any = true;
  }
  return any ? std::max(c, 0.0) : 0.0;
}

double hopf_check(const SpaceTimeField& u, double t0, double s) {
  // Nearest stored level at or after t0.
  int best = 0;
  double bestgap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < u.level_count(); ++j) {
    double gap = std::abs(u.times[j] - t0);
    if (gap < bestgap) {
      bestgap = gap;
      best = j;
    }
  }
  return hopf_check(u.at(best), s);
}

double weighted_hardy_quotient(const Field& u, double alpha, double sigma) {
  if (!(alpha > 1.0)) throw InvalidParams("hardy quotient needs alpha > 1");
  const DomainGrid& grid = *u.grid;
  Eigen::VectorXd g = gradient_magnitude(grid, u.values);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < grid.node_count(); ++i) {
    double d = grid.delta(i);
    num += std::pow(std::abs(u.values[i]), alpha) * std::pow(d, sigma - alpha);
    den += std::pow(g[i], alpha) * std::pow(d, sigma);
  }
  num *= grid.cell_volume();
  den *= grid.cell_volume();
  if (den < 1e-300) throw DegenerateDenominator("gradient integral vanishes");
  return num / den;
}

std::vector<DivergenceScanRow> divergence_scan(double s, const std::vector<double>& alphas,
                                               const std::vector<double>& hs, int dim,
                                               Shape shape) {
  if (hs.size() < 4) throw InvalidParams("divergence scan needs at least 4 spacings");
  for (size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1])) throw InvalidParams("h-sequence must decrease");

  std::vector<DomainGrid> grids;
  grids.reserve(hs.size());
  for (double h : hs) grids.push_back(build_grid(dim, shape, h));

  std::vector<DivergenceScanRow> rows;
  for (double alpha : alphas) {
    DivergenceScanRow row;
    row.alpha = alpha;
    row.predicted = 1.0 - (1.0 - s) * alpha;
    std::vector<double> habs;
    std::vector<double> shell;
    for (size_t k = 0; k < hs.size(); ++k) {
      const DomainGrid& grid = grids[k];
      double acc = 0.0;
      int count = 0;
      for (int i = 0; i < grid.node_count(); ++i) {
        double d = grid.delta(i);
        if (d > hs[k] && d <= 2.0 * hs[k]) {
          acc += std::pow(d, (s - 1.0) * alpha);
          ++count;
        }
      }
      if (count == 0) throw EmptyBand("no nodes in the boundary shell at h");
      // Shell integral per unit perimeter: the curvature of the level sets
      // cancels, leaving the pure h^{1-(1-s) alpha} scaling.
      double val = hs[k] * acc / count;
      row.shell_values.push_back(val);
      habs.push_back(hs[k]);
      shell.push_back(val);
    }
    row.fitted = fit_loglog(habs, shell).slope;
    row.convergent = row.fitted >= 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fkpz
