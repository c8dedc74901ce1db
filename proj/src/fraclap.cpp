#include "fkpz/fraclap.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace fkpz {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sphere_surface(int dim) { return dim == 1 ? 2.0 : 2.0 * kPi; }

// 64-point Gauss-Legendre on [a, b].
template <typename F>
double gauss_legendre(F f, double a, double b) {
  static const int n = 64;
  static std::vector<double> xs, ws;
  if (xs.empty()) {
    xs.resize(n);
    ws.resize(n);
    for (int i = 0; i < n; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
        }
        double dp = n * (x * p0 - p1) / (x * x - 1.0);
        double dx = p0 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      xs[i] = x;
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
      }
      double dp = n * (x * p0 - p1) / (x * x - 1.0);
      ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += ws[i] * f(mid + half * xs[i]);
  return acc * half;
}
}  // namespace

std::string convention_name(Convention c) {
  return c == Convention::FourierSymbol ? "fourier-symbol" : "paper-half";
}

Convention convention_from_name(const std::string& name) {
  if (name == "fourier-symbol") return Convention::FourierSymbol;
  if (name == "paper-half") return Convention::PaperHalf;
  throw InvalidParams("unknown convention '" + name + "'");
}

double normalization_constant(double s, int dim, Convention convention) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidParams("s must lie in (0,1)");
  if (dim != 1 && dim != 2) throw InvalidParams("dimension must be 1 or 2");
  // |Gamma(-s)| = Gamma(2-s)/(s(1-s)) for s in (0,1).
  double abs_gamma_ms = std::tgamma(2.0 - s) / (s * (1.0 - s));
  double half = std::pow(2.0, 2.0 * s - 1.0) * std::pow(kPi, -0.5 * dim) *
                std::tgamma(0.5 * (dim + 2.0 * s)) / abs_gamma_ms;
  return convention == Convention::PaperHalf ? half : 2.0 * half;
}

double FracParams::a_norm() const { return normalization_constant(s, dim, convention); }

void FracParams::validate_for_operator() const {
  if (!(s > 0.5 && s < 1.0)) throw InvalidParams("operator requires s in (1/2, 1)");
  if (dim != 1 && dim != 2) throw InvalidParams("dimension must be 1 or 2");
}

double cell_integral_abs_power(int dim, double h, double p) {
  if (!(p > -dim)) throw QuadratureFailure("cell integral diverges: p <= -dim");
  const double a = 0.5 * h;
  if (dim == 1) return 2.0 * std::pow(a, p + 1.0) / (p + 1.0);
  // Square cell: 8 * int_0^{pi/4} int_0^{a/cos t} r^{p+1} dr dt.
  double angular = gauss_legendre(
      [p](double t) { return std::pow(std::cos(t), -(p + 2.0)); }, 0.0, kPi / 4.0);
  return 8.0 * std::pow(a, p + 2.0) / (p + 2.0) * angular;
}

namespace {
// Fixed-order Gauss-Legendre nodes/weights on [-1/2, 1/2].
struct GaussRule {
  std::vector<double> x, w;
  explicit GaussRule(int m) {
    x.resize(m);
    w.resize(m);
    for (int i = 0; i < m; ++i) {
      double t = std::cos(kPi * (i + 0.75) / (m + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < m; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
        }
        double dp = m * (t * p0 - p1) / (t * t - 1.0);
        double dt = p0 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = m * (t * p0 - p1) / (t * t - 1.0);
      x[i] = 0.5 * t;
      w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const GaussRule& gauss_rule(int m) {
  static GaussRule g2(2), g6(6), g12(12);
  if (m <= 2) return g2;
  if (m <= 6) return g6;
  return g12;
}
}  // namespace

double kernel_cell_weight(int dim, double h, int di, int dj, double s) {
  const double exponent = dim + 2.0 * s;
  if (dim == 1) {
    // Exact antiderivative of |xi|^{-1-2s} away from the singular cell.
    double lo = (std::abs(di) - 0.5) * h, hi = (std::abs(di) + 0.5) * h;
    return (std::pow(lo, -2.0 * s) - std::pow(hi, -2.0 * s)) / (2.0 * s);
  }
  const double r2 = double(di) * di + double(dj) * dj;
  const int order = r2 <= 9.0 ? 12 : (r2 <= 100.0 ? 6 : 2);
  const GaussRule& g = gauss_rule(order);
  double acc = 0.0;
  for (size_t a = 0; a < g.x.size(); ++a)
    for (size_t b = 0; b < g.x.size(); ++b) {
      double x = (di + g.x[a]) * h;
      double y = (dj + g.x[b]) * h;
      acc += g.w[a] * g.w[b] * std::pow(x * x + y * y, -0.5 * exponent);
    }
  return acc * h * h;
}

// Trace moment (1/dim) int over the cell at offset z of [z.w + |w|^2/2] K(z+w)
// dw, w relative to the cell center. Summed over the mid field this is the
// leading consistency error of the midpoint-in-u rule, a pure multiple of the
// Laplacian, which the assembly cancels through the same neighbor stencil.
static double cell_trace_moment(int dim, double h, int di, int dj, double s) {
  const double exponent = dim + 2.0 * s;
  const GaussRule& g = gauss_rule(12);
  double acc = 0.0;
  if (dim == 1) {
    for (size_t a = 0; a < g.x.size(); ++a) {
      double w = g.x[a] * h;
      double z = di * h;
      acc += g.w[a] * (z * w + 0.5 * w * w) * std::pow(std::abs(z + w), -exponent);
    }
    return acc * h;
  }
  for (size_t a = 0; a < g.x.size(); ++a)
    for (size_t b = 0; b < g.x.size(); ++b) {
      double wx = g.x[a] * h, wy = g.x[b] * h;
      double zx = di * h, zy = dj * h;
      double x = zx + wx, y = zy + wy;
      acc += g.w[a] * g.w[b] * (zx * wx + zy * wy + 0.5 * (wx * wx + wy * wy)) *
             std::pow(x * x + y * y, -0.5 * exponent);
    }
  return acc * h * h / 2.0;  // (1/dim) with dim = 2
}

// Mid-field consistency coefficient: sum of the trace moments over the cells
// outside the near block (contributions decay like |z|^{-dim-2s}).
static double midfield_laplacian_moment(int dim, double h, double s, int reach) {
  const int cap = std::min(reach, 24);
  double gamma = 0.0;
  const int djlo = dim == 1 ? 0 : -cap;
  const int djhi = dim == 1 ? 0 : cap;
  for (int di = -cap; di <= cap; ++di)
    for (int dj = djlo; dj <= djhi; ++dj) {
      if (std::abs(di) <= 1 && std::abs(dj) <= 1) continue;
      gamma += cell_trace_moment(dim, h, di, dj, s);
    }
  return gamma;
}

// Second moment int |y|^{2-dim-2s} over the near block |y|_inf <= 3h/2 (the
// singular cell plus its first ring). The Taylor cancellation runs over the
// whole block: ring symmetry kills the odd moments, so the local error of the
// near part drops to O(h^{4-2s}).
double near_block_second_moment(int dim, double h, double s) {
  const double p = 2.0 - dim - 2.0 * s;
  if (dim == 1) {
    double a = 1.5 * h;
    return 2.0 * std::pow(a, p + 1.0) / (p + 1.0);
  }
  // Central cell by the radial formula, ring cells by Gauss.
  double acc = cell_integral_abs_power(dim, h, p);
  const GaussRule& g = gauss_rule(12);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) {
      if (di == 0 && dj == 0) continue;
      double cell = 0.0;
      for (size_t a = 0; a < g.x.size(); ++a)
        for (size_t b = 0; b < g.x.size(); ++b) {
          double x = (di + g.x[a]) * h;
          double y = (dj + g.x[b]) * h;
          cell += g.w[a] * g.w[b] * std::pow(x * x + y * y, 0.5 * p);
        }
      acc += cell * h * h;
    }
  return acc;
}

OperatorMatrix assemble(const DomainGrid& grid, const FracParams& params) {
  params.validate_for_operator();
  if (grid.dim() != params.dim) throw GridMismatch("grid/params dimension mismatch");
  const int n = grid.node_count();
  if (n > kMaxDenseNodes)
    throw DenseStorageExceeded(std::to_string(n) + " interior nodes exceed the dense cap of " +
                               std::to_string(kMaxDenseNodes));

  const double h = grid.h();
  const double s = params.s;
  const double a = params.a_norm();
  const int dim = grid.dim();
  const double rext = grid.r_ext();

  // Analytic far tail: integral of |d|^{-N-2s} over |d| > R_ext.
  const double tail_far = a * sphere_surface(dim) * std::pow(rext, -2.0 * s) / (2.0 * s);

  // Second-order Taylor cancellation over the singular cell and its first
  // ring, plus the mid-field consistency moment, spread onto the
  // nearest-neighbor Laplacian stencil.
  const int reach = static_cast<int>(std::floor(rext / h)) + 1;
  const double c_near = near_block_second_moment(dim, h, s);
  const double gamma = midfield_laplacian_moment(dim, h, s, reach);
  const double c_eff = c_near / (2.0 * dim) + gamma;
  const double c_nf = a * c_eff / (h * h);
  if (!std::isfinite(c_nf) || c_eff <= 0.0)
    throw QuadratureFailure("near-field correction non-finite or sign-breaking");

  OperatorMatrix A;
  A.grid = &grid;
  A.params = params;
  A.entries = Eigen::MatrixXd::Zero(n, n);
  A.tail = Eigen::VectorXd::Zero(n);

  // Exactly integrated kernel weights per lattice offset (shared by every
  // node; the table is symmetric in |di|, |dj|).
  std::vector<double> wtable((reach + 1) * (reach + 1), 0.0);
  for (int ai = 0; ai <= reach; ++ai)
    for (int aj = 0; aj <= (dim == 1 ? 0 : reach); ++aj) {
      if (ai == 0 && aj == 0) continue;
      wtable[ai * (reach + 1) + aj] = kernel_cell_weight(dim, h, ai, aj, s);
    }

  for (int i = 0; i < n; ++i) {
    const auto& ci = grid.lattice_coord(i);
    double diag = tail_far;
    double tail_i = tail_far;
    const int djlo = dim == 1 ? 0 : -reach;
    const int djhi = dim == 1 ? 0 : reach;
    for (int di = -reach; di <= reach; ++di) {
      for (int dj = djlo; dj <= djhi; ++dj) {
        if (std::abs(di) <= 1 && std::abs(dj) <= 1) continue;  // near block
        const double dist = h * std::sqrt(double(di) * di + double(dj) * dj);
        if (dist > rext) continue;
        const double w = a * wtable[std::abs(di) * (reach + 1) + std::abs(dj)];
        diag += w;
        int j = grid.find(ci[0] + di, ci[1] + dj);
        if (j >= 0)
          A.entries(i, j) -= w;
        else
          tail_i += w;
      }
    }
    // Nearest-neighbor part of the singular-cell correction.
    for (int ax = 0; ax < dim; ++ax) {
      for (int sgn : {-1, 1}) {
        int j = grid.find(ci[0] + sgn * (ax == 0), ci[1] + sgn * (ax == 1));
        diag += c_nf;
        if (j >= 0)
          A.entries(i, j) -= c_nf;
        else
          tail_i += c_nf;
      }
    }
    A.entries(i, i) = diag;
    A.tail[i] = tail_i;
  }
  return A;
}

Field apply(const OperatorMatrix& A, const Field& u) {
  if (u.grid != A.grid) throw GridMismatch("apply: field lives on a different grid");
  return Field(*A.grid, A.entries * u.values);
}

std::vector<SymbolSample> symbol_calibration(const FracParams& params,
                                             const std::vector<std::array<double, 2>>& modes,
                                             int lattice_size) {
  params.validate_for_operator();
  if (lattice_size < 32) throw InvalidParams("lattice size must be at least 32 per axis");
  const int dim = params.dim;
  const double h = 2.0 * kPi / lattice_size;
  const double s = params.s;
  const double a = params.a_norm();
  const double cellvol = dim == 1 ? h : h * h;
  const double c_near = near_block_second_moment(dim, h, s);
  const double gamma = midfield_laplacian_moment(dim, h, s, 24);
  const double c_nf = a * (c_near / (2.0 * dim) + gamma) / (h * h);

  // Truncation radius chosen so the neglected oscillatory tail is below 0.1%
  // of the smallest nonzero target eigenvalue (which is >= 1 for integer k).
  double r_cal = std::pow(a * sphere_surface(dim) / (2.0 * s * 1e-3), 1.0 / (2.0 * s));
  r_cal = std::max(r_cal, 4.0 * kPi);
  const double tail = a * sphere_surface(dim) * std::pow(r_cal, -2.0 * s) / (2.0 * s);

  std::vector<SymbolSample> out;
  const int reach = static_cast<int>(std::floor(r_cal / h)) + 1;
  for (const auto& k : modes) {
    const double kmag = std::hypot(k[0], k[1]);
    double m = 0.0;
    if (kmag > 0.0) {
      const int djlo = dim == 1 ? 0 : -reach;
      const int djhi = dim == 1 ? 0 : reach;
      for (int di = -reach; di <= reach; ++di) {
        for (int dj = djlo; dj <= djhi; ++dj) {
          if (std::abs(di) <= 1 && std::abs(dj) <= 1) continue;  // near block
          const double r2 = double(di) * di + double(dj) * dj;
          const double dist = h * std::sqrt(r2);
          if (dist > r_cal) continue;
          // Same cell-integrated weights as the assembly near the
          // singularity; midpoint far out where they coincide.
          const double w = r2 <= 100.0 ? kernel_cell_weight(dim, h, std::abs(di), std::abs(dj), s)
                                       : cellvol * std::pow(dist, -(dim + 2.0 * s));
          const double phase = k[0] * di * h + k[1] * dj * h;
          m += (1.0 - std::cos(phase)) * w;
        }
      }
      m *= a;
      for (int ax = 0; ax < dim; ++ax) m += c_nf * 2.0 * (1.0 - std::cos(k[ax] * h));
      m += tail;
    }
    SymbolSample sample;
    sample.k = k;
    sample.measured = m;
    sample.exact = std::pow(kmag, 2.0 * s);
    sample.rel_err = kmag == 0.0 ? std::abs(m) : std::abs(m - sample.exact) / sample.exact;
    out.push_back(sample);
  }
  return out;
}

void dump_operator(const OperatorMatrix& A, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("IoError", "cannot open " + path);
  const char magic[4] = {'F', 'L', 'A', 'P'};
  const std::uint32_t version = 1;
  const std::uint64_t n = static_cast<std::uint64_t>(A.size());
  os.write(magic, 4);
  os.write(reinterpret_cast<const char*>(&version), sizeof version);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  // Row-major payload.
  for (int i = 0; i < A.size(); ++i)
    for (int j = 0; j < A.size(); ++j) {
      double v = A.entries(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

Eigen::MatrixXd load_operator_entries(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("IoError", "cannot open " + path);
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t n = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (std::memcmp(magic, "FLAP", 4) != 0 || version != 1)
    throw Error("IoError", "bad operator dump header in " + path);
  Eigen::MatrixXd m(n, n);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < n; ++j) {
      double v;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      m(i, j) = v;
    }
  if (!is) throw Error("IoError", "truncated operator dump " + path);
  return m;
}

}  // namespace fkpz
