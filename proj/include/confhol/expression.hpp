#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confhol/jet.hpp"

namespace confhol {

// Small arithmetic expression language for metric components and family
// parameters: numbers, identifiers, + - * / ^, unary minus, parentheses and
// the functions exp, log, sin, cos, sqrt. Evaluation is forward-mode over jets,
// so derivatives are exact up to rounding.
class Expression {
 public:
  Expression() = default;
  static Expression parse(std::string_view text);
  static Expression constant(double c);

  // Resolve identifiers: coordinate names become variables, parameter names
  // become constants, `pi` is predefined. Unknown names raise ParseError.
  Expression bind(const std::vector<std::string>& coords,
                  const std::map<std::string, double>& params = {}) const;

  bool bound() const noexcept { return dim_ >= 0; }
  Jet evaluate(std::span<const double> x, int order) const;
  double value(std::span<const double> x) const;

  // true when the coordinate appears symbolically (after binding)
  bool depends_on(int coord) const;
  bool is_constant() const;
  std::set<std::string> identifiers() const;
  const std::string& text() const noexcept { return text_; }

  struct Node;

 private:
  Jet eval_node(int id, std::span<const double> x, int order) const;
  double value_node(int id, std::span<const double> x) const;

  std::string text_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
  int dim_ = -1;
};

struct Expression::Node {
  enum class Kind { Number, Ident, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string name;  // identifier or function name
  int var = -1;
  int a = -1, b = -1;
};

}  // namespace confhol
