#include "fkpz/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fkpz {

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::Interval: return "interval";
    case Shape::Ball: return "ball";
    case Shape::Box: return "box";
  }
  return "?";
}

Shape shape_from_name(const std::string& name) {
  if (name == "interval") return Shape::Interval;
  if (name == "ball") return Shape::Ball;
  if (name == "box") return Shape::Box;
  throw UnsupportedShape("unknown shape '" + name + "'");
}

DomainGrid::DomainGrid(int dim, Shape shape, double h, double extent)
    : dim_(dim), shape_(shape), h_(h), extent_(extent) {
  if (dim != 1 && dim != 2) throw UnsupportedShape("dimension must be 1 or 2");
  if (shape == Shape::Interval && dim != 1)
    throw UnsupportedShape("interval is one-dimensional");
  if ((shape == Shape::Ball || shape == Shape::Box) && dim != 2)
    throw UnsupportedShape(shape_name(shape) + " is two-dimensional");
  if (!(h > 0.0)) throw InvalidParams("spacing h must be positive");
  if (!(extent > 0.0)) throw InvalidParams("extent must be positive");

  r_ext_ = 2.0 * extent_;  // every point of the domain is within diam of every node

  // Lattice points k*h strictly inside the domain.
  kmax_ = static_cast<int>(std::floor(extent_ / h_ + 0.5)) + 1;
  const int side = 2 * kmax_ + 1;
  lookup_.assign(dim_ == 1 ? side : side * side, -1);

  const int jlo = dim_ == 1 ? 0 : -kmax_;
  const int jhi = dim_ == 1 ? 0 : kmax_;
  for (int i = -kmax_; i <= kmax_; ++i) {
    for (int j = jlo; j <= jhi; ++j) {
      Point x{i * h_, j * h_};
      double d = distance_to_boundary(x);
      if (d <= 0.0) continue;
      lookup_[lookup_index(i, j)] = static_cast<int>(nodes_.size());
      nodes_.push_back(x);
      delta_.push_back(d);
      coords_.push_back({i, j});
    }
  }

  // Per-axis interior count; three nodes is the minimum for the difference
  // stencils to exist at all.
  int axis_nodes = 0;
  for (int i = -kmax_; i <= kmax_; ++i)
    if (std::abs(i) * h_ < extent_) ++axis_nodes;
  if (axis_nodes < 3 || nodes_.empty())
    throw SpacingTooCoarse("h=" + std::to_string(h_) + " leaves " +
                           std::to_string(axis_nodes) + " interior nodes per axis");
}

double DomainGrid::distance_to_boundary(const Point& x) const {
  switch (shape_) {
    case Shape::Interval:
      return extent_ - std::abs(x[0]);
    case Shape::Ball:
      return extent_ - std::hypot(x[0], x[1]);
    case Shape::Box:
      return std::min(extent_ - std::abs(x[0]), extent_ - std::abs(x[1]));
  }
  return 0.0;
}

int DomainGrid::lookup_index(int i, int j) const {
  const int side = 2 * kmax_ + 1;
  if (dim_ == 1) return i + kmax_;
  return (i + kmax_) * side + (j + kmax_);
}

int DomainGrid::find(int i, int j) const {
  if (std::abs(i) > kmax_ || std::abs(j) > kmax_) return -1;
  if (dim_ == 1 && j != 0) return -1;
  return lookup_[lookup_index(i, j)];
}

std::string DomainGrid::manifest_json() const {
  std::ostringstream os;
  os << "{\"dimension\": " << dim_ << ", \"shape\": \"" << shape_name(shape_)
     << "\", \"h\": " << h_ << ", \"node_count\": " << node_count() << "}";
  return os.str();
}

DomainGrid build_grid(int dim, Shape shape, double h, double extent) {
  return DomainGrid(dim, shape, h, extent);
}

Field::Field(const DomainGrid& g, Eigen::VectorXd v) : grid(&g), values(std::move(v)) {
  if (values.size() != g.node_count())
    throw GridMismatch("field has " + std::to_string(values.size()) + " values for " +
                       std::to_string(g.node_count()) + " nodes");
}

Field sample_function(const DomainGrid& grid, const std::function<double(const Point&)>& formula) {
  Eigen::VectorXd v(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) {
    double y = formula(grid.node(i));
    if (!std::isfinite(y))
      throw NonFiniteSample("formula non-finite at node " + std::to_string(i));
    v[i] = y;
  }
  return Field(grid, std::move(v));
}

void SpaceTimeField::validate() const {
  if (times.empty() || times.size() != levels.size())
    throw InvalidParams("trajectory levels/times mismatch");
  if (times.front() != 0.0) throw InvalidParams("time grid must start at 0");
  for (size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw InvalidParams("time grid must be strictly increasing");
  for (const auto& lvl : levels)
    if (lvl.size() != grid->node_count()) throw GridMismatch("level size mismatch");
}

Eigen::MatrixXd discrete_gradient(const DomainGrid& grid, const Eigen::VectorXd& values,
                                  GradientMode mode) {
  if (values.size() != grid.node_count()) throw GridMismatch("gradient: field size mismatch");
  const double h = grid.h();
  Eigen::MatrixXd g(grid.node_count(), grid.dim());
  for (int n = 0; n < grid.node_count(); ++n) {
    const auto& c = grid.lattice_coord(n);
    for (int ax = 0; ax < grid.dim(); ++ax) {
      int ip = grid.find(c[0] + (ax == 0), c[1] + (ax == 1));
      int im = grid.find(c[0] - (ax == 0), c[1] - (ax == 1));
      double up = ip >= 0 ? values[ip] : 0.0;
      double um = im >= 0 ? values[im] : 0.0;
      if (mode == GradientMode::OneSidedAtBoundary && (ip < 0 || im < 0)) {
        if (ip < 0 && im < 0)
          g(n, ax) = 0.0;
        else if (ip < 0)
          g(n, ax) = (values[n] - um) / h;
        else
          g(n, ax) = (up - values[n]) / h;
      } else {
        g(n, ax) = (up - um) / (2.0 * h);
      }
    }
  }
  return g;
}

Eigen::VectorXd gradient_magnitude(const DomainGrid& grid, const Eigen::VectorXd& values,
                                   GradientMode mode) {
  Eigen::MatrixXd g = discrete_gradient(grid, values, mode);
  return g.rowwise().norm();
}

}  // namespace fkpz
