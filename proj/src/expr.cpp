#include "fkpz/expr.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace fkpz {
namespace detail {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call1, Call2 };

struct Node {
  Op op;
  double value = 0.0;       // Const
  char var = 0;             // Var: x y r d t
  std::string fn;           // Call*
  std::shared_ptr<const Node> a, b;
};

using P = std::shared_ptr<const Node>;

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  P parse() {
    P e = expr();
    skip();
    if (pos_ != s_.size())
      throw ConfigInvalid("trailing characters in formula at position " + std::to_string(pos_));
    return e;
  }

private:
  const std::string& s_;
  size_t pos_ = 0;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  P expr() {
    P e = term();
    while (true) {
      if (eat('+'))
        e = node(Op::Add, e, term());
      else if (eat('-'))
        e = node(Op::Sub, e, term());
      else
        return e;
    }
  }

  P term() {
    P e = factor();
    while (true) {
      if (eat('*'))
        e = node(Op::Mul, e, factor());
      else if (eat('/'))
        e = node(Op::Div, e, factor());
      else
        return e;
    }
  }

  P factor() {
    if (eat('-')) {  // unary minus binds looser than '^'
      auto n = std::make_shared<Node>();
      n->op = Op::Neg;
      n->a = factor();
      return n;
    }
    return power();
  }

  P power() {
    P base = primary();
    if (eat('^')) return node(Op::Pow, base, factor());  // right associative
    return base;
  }

  P primary() {
    skip();
    if (eat('(')) {
      P e = expr();
      if (!eat(')')) throw ConfigInvalid("missing ')' in formula");
      return e;
    }
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    throw ConfigInvalid("unexpected character '" + std::string(1, c) + "' in formula");
  }

  P number() {
    size_t end;
    double v = std::stod(s_.substr(pos_), &end);
    pos_ += end;
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
  }

  P ident() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (eat('(')) {
      std::vector<P> args;
      args.push_back(expr());
      while (eat(',')) args.push_back(expr());
      if (!eat(')')) throw ConfigInvalid("missing ')' after arguments of " + name);
      static const char* one[] = {"abs", "sin", "cos", "exp", "log", "sqrt", "delta"};
      static const char* two[] = {"pow", "min", "max"};
      for (auto* f : one)
        if (name == f) {
          if (args.size() != 1) throw ConfigInvalid(name + " takes one argument");
          if (name == "delta") {  // delta(x) is the boundary-distance variable
            auto n = std::make_shared<Node>();
            n->op = Op::Var;
            n->var = 'd';
            return n;
          }
          auto n = std::make_shared<Node>();
          n->op = Op::Call1;
          n->fn = name;
          n->a = args[0];
          return n;
        }
      for (auto* f : two)
        if (name == f) {
          if (args.size() != 2) throw ConfigInvalid(name + " takes two arguments");
          auto n = std::make_shared<Node>();
          n->op = Op::Call2;
          n->fn = name;
          n->a = args[0];
          n->b = args[1];
          return n;
        }
      throw ConfigInvalid("unknown function '" + name + "'");
    }
    if (name == "pi") {
      auto n = std::make_shared<Node>();
      n->op = Op::Const;
      n->value = 3.14159265358979323846;
      return n;
    }
    if (name == "x" || name == "y" || name == "r" || name == "d" || name == "t") {
      auto n = std::make_shared<Node>();
      n->op = Op::Var;
      n->var = name[0];
      return n;
    }
    throw ConfigInvalid("unknown variable '" + name + "' (use x, y, r, d, t)");
  }

  static P node(Op op, P a, P b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
};

double eval_node(const Node& n, const ExprContext& c) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var:
      switch (n.var) {
        case 'x': return c.x;
        case 'y': return c.y;
        case 'r': return c.r;
        case 'd': return c.d;
        case 't': return c.t;
      }
      return 0.0;
    case Op::Add: return eval_node(*n.a, c) + eval_node(*n.b, c);
    case Op::Sub: return eval_node(*n.a, c) - eval_node(*n.b, c);
    case Op::Mul: return eval_node(*n.a, c) * eval_node(*n.b, c);
    case Op::Div: return eval_node(*n.a, c) / eval_node(*n.b, c);
    case Op::Pow: return std::pow(eval_node(*n.a, c), eval_node(*n.b, c));
    case Op::Neg: return -eval_node(*n.a, c);
    case Op::Call1: {
      double a = eval_node(*n.a, c);
      if (n.fn == "abs") return std::abs(a);
      if (n.fn == "sin") return std::sin(a);
      if (n.fn == "cos") return std::cos(a);
      if (n.fn == "exp") return std::exp(a);
      if (n.fn == "log") return std::log(a);
      if (n.fn == "sqrt") return std::sqrt(a);
      break;
    }
    case Op::Call2: {
      double a = eval_node(*n.a, c), b = eval_node(*n.b, c);
      if (n.fn == "pow") return std::pow(a, b);
      if (n.fn == "min") return std::min(a, b);
      if (n.fn == "max") return std::max(a, b);
      break;
    }
  }
  return 0.0;
}

}  // namespace detail

Expr Expr::parse(const std::string& text) {
  Expr e;
  e.root_ = detail::Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expr::eval(const ExprContext& ctx) const { return detail::eval_node(*root_, ctx); }

std::function<double(const Point&, double)> bind_formula(const DomainGrid& grid, const Expr& e) {
  return [&grid, e](const Point& p, double t) {
    ExprContext c;
    c.x = p[0];
    c.y = p[1];
    c.r = std::hypot(p[0], p[1]);
    c.d = grid.distance_to_boundary(p);
    c.t = t;
    return e.eval(c);
  };
}

}  // namespace fkpz
