#pragma once

#include <memory>
#include <string>

#include "fkpz/grid.hpp"

namespace fkpz {

// Evaluation context for the data-formula grammar: coordinates, |x|, the
// boundary distance and time.
struct ExprContext {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
  double d = 0.0;
  double t = 0.0;
};

namespace detail {
struct Node;
}

// Tiny expression grammar over x, y, r = |x|, d = delta(x), t and constants
// with + - * / ^, unary minus, and abs/sin/cos/exp/log/sqrt/pow/min/max.
class Expr {
public:
  static Expr parse(const std::string& text);
  double eval(const ExprContext& ctx) const;
  const std::string& text() const { return text_; }

private:
  std::shared_ptr<const detail::Node> root_;
  std::string text_;
};

// Formula bound to a grid: a callable of (point, time).
std::function<double(const Point&, double)> bind_formula(const DomainGrid& grid, const Expr& e);

}  // namespace fkpz
