#include "confhol/expression.hpp"

#include <cctype>
#include <cstdio>
#include <cmath>
#include <numbers>

#include "confhol/error.hpp"

namespace confhol {

namespace {

using Node = Expression::Node;
using Kind = Node::Kind;

const std::set<std::string> kFunctions = {"exp", "log", "sin", "cos", "sqrt"};

class Parser {
 public:
  Parser(std::string_view s, std::vector<Node>& out) : s_(s), nodes_(out) {}

  int parse() {
    int r = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression '" + std::string(s_) + "' at column " +
                     std::to_string(pos_ + 1) + ": " + msg);
  }
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
  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  int binary(Kind k, int a, int b) {
    Node n;
    n.kind = k;
    n.a = a;
    n.b = b;
    return push(n);
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (eat('+')) lhs = binary(Kind::Add, lhs, term());
      else if (eat('-')) lhs = binary(Kind::Sub, lhs, term());
      else return lhs;
    }
  }
  int term() {
    int lhs = unary();
    for (;;) {
      if (eat('*')) lhs = binary(Kind::Mul, lhs, unary());
      else if (eat('/')) lhs = binary(Kind::Div, lhs, unary());
      else return lhs;
    }
  }
  int unary() {
    if (eat('-')) {
      Node n;
      n.kind = Kind::Neg;
      n.a = unary();
      return push(n);
    }
    if (eat('+')) return unary();
    return power();
  }
  int power() {
    int base = primary();
    if (eat('^')) return binary(Kind::Pow, base, unary());
    return base;
  }
  int primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (eat('(')) {
      int r = expr();
      if (!eat(')')) fail("expected ')'");
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t save = pos_++;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
        if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        } else {
          pos_ = save;
        }
      }
      Node n;
      n.kind = Kind::Number;
      try {
        n.number = std::stod(std::string(s_.substr(start, pos_ - start)));
      } catch (const std::exception&) {
        fail("malformed number");
      }
      return push(n);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      if (eat('(')) {
        if (!kFunctions.count(name)) fail("unknown function '" + name + "'");
        Node n;
        n.kind = Kind::Call;
        n.name = name;
        n.a = expr();
        if (!eat(')')) fail("expected ')'");
        return push(n);
      }
      Node n;
      n.kind = Kind::Ident;
      n.name = name;
      return push(n);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<Node>& nodes_;
};

// exponent that is a plain (possibly negated) integer literal
bool integer_literal(const std::vector<Node>& nodes, int id, int& out) {
  const Node& n = nodes[id];
  if (n.kind == Kind::Number && n.number == std::round(n.number) && std::abs(n.number) <= 64) {
    out = static_cast<int>(n.number);
    return true;
  }
  if (n.kind == Kind::Neg && integer_literal(nodes, n.a, out)) {
    out = -out;
    return true;
  }
  return false;
}

bool subtree_has_variable(const std::vector<Node>& nodes, int id) {
  if (id < 0) return false;
  const Node& n = nodes[id];
  if (n.kind == Kind::Variable) return true;
  return subtree_has_variable(nodes, n.a) || subtree_has_variable(nodes, n.b);
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  auto nodes = std::make_shared<std::vector<Node>>();
  Expression e;
  e.text_ = std::string(text);
  e.root_ = Parser(text, *nodes).parse();
  e.nodes_ = std::move(nodes);
  return e;
}

Expression Expression::constant(double c) {
  auto nodes = std::make_shared<std::vector<Node>>(1);
  (*nodes)[0].number = c;
  Expression e;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  e.text_ = buf;
  e.root_ = 0;
  e.nodes_ = std::move(nodes);
  return e;
}

Expression Expression::bind(const std::vector<std::string>& coords,
                            const std::map<std::string, double>& params) const {
  if (!nodes_) throw ParseError("binding an empty expression");
  auto nodes = std::make_shared<std::vector<Node>>(*nodes_);
  for (Node& n : *nodes) {
    if (n.kind != Kind::Ident) continue;
    bool found = false;
    for (std::size_t i = 0; i < coords.size(); ++i)
      if (coords[i] == n.name) {
        n.kind = Kind::Variable;
        n.var = static_cast<int>(i);
        found = true;
        break;
      }
    if (found) continue;
    if (auto it = params.find(n.name); it != params.end()) {
      n.kind = Kind::Number;
      n.number = it->second;
    } else if (n.name == "pi") {
      n.kind = Kind::Number;
      n.number = std::numbers::pi;
    } else {
      throw ParseError("expression '" + text_ + "': unknown identifier '" + n.name + "'");
    }
  }
  Expression e = *this;
  e.nodes_ = std::move(nodes);
  e.dim_ = static_cast<int>(coords.size());
  return e;
}

bool Expression::depends_on(int coord) const {
  for (const Node& n : *nodes_)
    if (n.kind == Kind::Variable && n.var == coord) return true;
  return false;
}

bool Expression::is_constant() const {
  for (const Node& n : *nodes_)
    if (n.kind == Kind::Variable || n.kind == Kind::Ident) return false;
  return true;
}

std::set<std::string> Expression::identifiers() const {
  std::set<std::string> out;
  if (!nodes_) return out;
  for (const Node& n : *nodes_)
    if (n.kind == Kind::Ident) out.insert(n.name);
  return out;
}

Jet Expression::evaluate(std::span<const double> x, int order) const {
  if (!bound()) throw ParseError("expression '" + text_ + "' evaluated before binding");
  if (static_cast<int>(x.size()) != dim_) throw DimensionError("expression coordinate count");
  return eval_node(root_, x, order);
}

double Expression::value(std::span<const double> x) const {
  if (!bound()) throw ParseError("expression '" + text_ + "' evaluated before binding");
  return value_node(root_, x);
}

Jet Expression::eval_node(int id, std::span<const double> x, int order) const {
  const Node& n = (*nodes_)[id];
  switch (n.kind) {
    case Kind::Number:
      return Jet(dim_, order, n.number);
    case Kind::Variable:
      return Jet::variable(dim_, order, n.var, x[n.var]);
    case Kind::Ident:
      throw ParseError("unbound identifier '" + n.name + "'");
    case Kind::Neg:
      return -eval_node(n.a, x, order);
    case Kind::Add:
      return eval_node(n.a, x, order) + eval_node(n.b, x, order);
    case Kind::Sub:
      return eval_node(n.a, x, order) - eval_node(n.b, x, order);
    case Kind::Mul:
      return eval_node(n.a, x, order) * eval_node(n.b, x, order);
    case Kind::Div:
      return eval_node(n.a, x, order) / eval_node(n.b, x, order);
    case Kind::Pow: {
      int k;
      if (integer_literal(*nodes_, n.b, k)) return powi(eval_node(n.a, x, order), k);
      Jet base = eval_node(n.a, x, order);
      if (!subtree_has_variable(*nodes_, n.b)) return pow(base, value_node(n.b, x));
      Jet ex = eval_node(n.b, x, order);
      return exp(ex * log(base));
    }
    case Kind::Call: {
      Jet a = eval_node(n.a, x, order);
      if (n.name == "exp") return exp(a);
      if (n.name == "log") return log(a);
      if (n.name == "sin") return sin(a);
      if (n.name == "cos") return cos(a);
      return sqrt(a);
    }
  }
  return Jet(dim_, order);
}

double Expression::value_node(int id, std::span<const double> x) const {
  const Node& n = (*nodes_)[id];
  switch (n.kind) {
    case Kind::Number: return n.number;
    case Kind::Variable: return x[n.var];
    case Kind::Ident: throw ParseError("unbound identifier '" + n.name + "'");
    case Kind::Neg: return -value_node(n.a, x);
    case Kind::Add: return value_node(n.a, x) + value_node(n.b, x);
    case Kind::Sub: return value_node(n.a, x) - value_node(n.b, x);
    case Kind::Mul: return value_node(n.a, x) * value_node(n.b, x);
    case Kind::Div: return value_node(n.a, x) / value_node(n.b, x);
    case Kind::Pow: {
      int k;
      if (integer_literal(*nodes_, n.b, k)) return std::pow(value_node(n.a, x), k);
      return std::pow(value_node(n.a, x), value_node(n.b, x));
    }
    case Kind::Call: {
      const double a = value_node(n.a, x);
      if (n.name == "exp") return std::exp(a);
      if (n.name == "log") return std::log(a);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "cos") return std::cos(a);
      return std::sqrt(a);
    }
  }
  return 0.0;
}

}  // namespace confhol
