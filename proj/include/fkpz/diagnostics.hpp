#pragma once

#include <optional>
#include <vector>

#include "fkpz/grid.hpp"

namespace fkpz {

enum class NormKind {
  Lebesgue,   // L^p(Omega) or L^p(Omega_T)
  Bochner,    // L^q(0,T; W^{1,q}_0): gradient in space, q in time
  Gagliardo,  // L^q(0,T; W^{s,q}_0): double-sum seminorm with the exterior part
  Weighted,   // L^p with weight delta^w
};

struct NormSpec {
  NormKind kind = NormKind::Lebesgue;
  double p = 2.0;
  double weight = 0.0;           // exponent w in delta^w (Weighted kind)
  double s = 0.75;               // fractional order (Gagliardo kind)
  std::optional<double> trunc;   // optional truncation level k
};

double norm(const Field& u, const NormSpec& spec);
double norm(const SpaceTimeField& u, const NormSpec& spec);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

ExponentFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
ExponentFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

// Geometric bands delta in [2h 2^j, 2h 2^{j+1}) up to the deepest populated one.
std::vector<Band> geometric_bands(const DomainGrid& grid);

struct BandRow {
  Band band;
  double mean_delta = 0.0;  // geometric mean over band nodes
  double mean_u = 0.0;      // geometric mean over band nodes
  int nodes = 0;
};

struct BoundaryExponent {
  ExponentFit fit;
  std::vector<BandRow> rows;
};

// Slope of log(band-average u) against log(band-average delta); for profiles
// behaving like delta^gamma the fit recovers gamma.
BoundaryExponent boundary_exponent(const Field& u, const std::vector<Band>& bands);

// Fitted c with u(., t0) >= c delta^s over nodes with delta >= 2h.
double hopf_check(const SpaceTimeField& u, double t0, double s);
double hopf_check(const Field& u, double s);

// (int |u|^a delta^{sigma-a}) / (int |grad u|^a delta^sigma); the weighted
// Hardy inequality bounds this by a constant when sigma < a-1.
double weighted_hardy_quotient(const Field& u, double alpha, double sigma);

struct DivergenceScanRow {
  double alpha = 0.0;
  double fitted = 0.0;
  double predicted = 0.0;  // 1 - (1-s) alpha
  bool convergent = false;
  std::vector<double> shell_values;  // one per h in the scan
};

// Boundary-layer engine: the shell integral over {h < delta <= 2h} of
// delta^{(s-1) alpha} scales like h^{1-(1-s) alpha}, so its fitted slope in h
// recovers the growth exponent of the truncated integral in all regimes.
std::vector<DivergenceScanRow> divergence_scan(double s, const std::vector<double>& alphas,
                                               const std::vector<double>& hs, int dim = 2,
                                               Shape shape = Shape::Ball);

}  // namespace fkpz
