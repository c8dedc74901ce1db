#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "fkpz/errors.hpp"

namespace fkpz {

enum class Shape { Interval, Ball, Box };

std::string shape_name(Shape s);
Shape shape_from_name(const std::string& name);

using Point = std::array<double, 2>;  // x[1] == 0 in one dimension

// Uniform tensor lattice restricted to the open domain. Nodes sit at integer
// multiples of h, so the set is symmetric under the domain's reflections and
// the singular-integral quadrature stays translation invariant. The boundary
// distance is evaluated from the exact shape formula, never from the mesh.
class DomainGrid {
public:
  DomainGrid(int dim, Shape shape, double h, double extent);

  int dim() const { return dim_; }
  Shape shape() const { return shape_; }
  double h() const { return h_; }
  double extent() const { return extent_; }
  double diameter() const { return 2.0 * extent_; }
  double r_ext() const { return r_ext_; }
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(int i) const { return nodes_[i]; }
  double delta(int i) const { return delta_[i]; }
  const std::vector<double>& delta() const { return delta_; }

  // Signed distance to the boundary of the exact shape (positive inside).
  double distance_to_boundary(const Point& x) const;
  bool inside(const Point& x) const { return distance_to_boundary(x) > 0.0; }

  // Node index of lattice coordinate (i, j), or -1 if that lattice point is
  // not an interior node.
  int find(int i, int j = 0) const;
  const std::array<int, 2>& lattice_coord(int node) const { return coords_[node]; }
  int axis_span() const { return kmax_; }  // lattice coordinates run in [-kmax, kmax]

  std::string manifest_json() const;

private:
  int dim_;
  Shape shape_;
  double h_;
  double extent_;
  double r_ext_;
  int kmax_ = 0;
  std::vector<Point> nodes_;
  std::vector<double> delta_;
  std::vector<std::array<int, 2>> coords_;
  std::vector<int> lookup_;  // dense (2*kmax+1)^dim table of node ids
  int lookup_index(int i, int j) const;
};

DomainGrid build_grid(int dim, Shape shape, double h, double extent = 1.0);

// Node values on the interior; implicitly zero on every exterior lattice
// point (the Dirichlet condition is exact, not meshed).
struct Field {
  const DomainGrid* grid = nullptr;
  Eigen::VectorXd values;

  Field() = default;
  Field(const DomainGrid& g, Eigen::VectorXd v);
  explicit Field(const DomainGrid& g) : grid(&g), values(Eigen::VectorXd::Zero(g.node_count())) {}
  int size() const { return static_cast<int>(values.size()); }
};

Field sample_function(const DomainGrid& grid, const std::function<double(const Point&)>& formula);

struct SpaceTimeField {
  const DomainGrid* grid = nullptr;
  std::vector<double> times;            // strictly increasing, times[0] == 0
  std::vector<Eigen::VectorXd> levels;  // one interior-value vector per time

  int level_count() const { return static_cast<int>(times.size()); }
  Field at(int j) const { return Field(*grid, levels[j]); }
  void validate() const;
};

enum class GradientMode {
  ZeroExtension,       // centered everywhere; exterior neighbors contribute 0
  OneSidedAtBoundary,  // centered where both neighbors exist, one-sided otherwise
};

// Discrete gradient, one row per node, one column per axis.
Eigen::MatrixXd discrete_gradient(const DomainGrid& grid, const Eigen::VectorXd& values,
                                  GradientMode mode = GradientMode::ZeroExtension);

Eigen::VectorXd gradient_magnitude(const DomainGrid& grid, const Eigen::VectorXd& values,
                                   GradientMode mode = GradientMode::ZeroExtension);

}  // namespace fkpz
