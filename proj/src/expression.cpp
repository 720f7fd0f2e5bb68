#include "degenlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "degenlab/error.hpp"

namespace degenlab {

struct Expression::Node {
  enum class Kind { Number, Variable, Radius, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Number;
  double value = 0;
  int var = 0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(const Point& x) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::Variable: return x[var];
      case Kind::Radius: return x.norm();
      case Kind::Neg: return -args[0]->eval(x);
      case Kind::Add: return args[0]->eval(x) + args[1]->eval(x);
      case Kind::Sub: return args[0]->eval(x) - args[1]->eval(x);
      case Kind::Mul: return args[0]->eval(x) * args[1]->eval(x);
      case Kind::Div: return args[0]->eval(x) / args[1]->eval(x);
      case Kind::Pow: return std::pow(args[0]->eval(x), args[1]->eval(x));
      case Kind::Call: break;
    }
    const double a = args[0]->eval(x);
    if (fn == "sin") return std::sin(a);
    if (fn == "cos") return std::cos(a);
    if (fn == "exp") return std::exp(a);
    if (fn == "abs") return std::abs(a);
    if (fn == "sqrt") return std::sqrt(a);
    if (fn == "log") return std::log(a);
    double acc = a;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const double b = args[i]->eval(x);
      acc = fn == "min" ? std::min(acc, b) : std::max(acc, b);
    }
    return acc;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

  NodePtr run() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("expression \"" + s_ + "\" at column " + std::to_string(pos_ + 1) + ": " + msg);
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

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (eat('+')) lhs = make(Kind::Add, {lhs, term()});
      else if (eat('-')) lhs = make(Kind::Sub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (eat('*')) lhs = make(Kind::Mul, {lhs, unary()});
      else if (eat('/')) lhs = make(Kind::Div, {lhs, unary()});
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Kind::Neg, {unary()});
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Kind::Pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (eat('(')) {
      NodePtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    double v = 0;
    const char* first = s_.data() + pos_;
    const auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("bad number");
    pos_ += static_cast<std::size_t>(ptr - first);
    auto n = std::make_shared<Expression::Node>();
    n->value = v;
    return n;
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (id == "pi") {
      auto n = std::make_shared<Expression::Node>();
      n->value = std::numbers::pi;
      return n;
    }
    if (id == "r") return make(Kind::Radius);
    if (id.size() >= 2 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos) {
      const int k = std::stoi(id.substr(1));
      if (k < 1 || k > dim_) fail("variable " + id + " outside dimension " + std::to_string(dim_));
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Variable;
      n->var = k - 1;
      return n;
    }
    static const std::vector<std::string> unary_fns = {"sin", "cos", "exp", "abs", "sqrt", "log"};
    const bool is_unary = std::find(unary_fns.begin(), unary_fns.end(), id) != unary_fns.end();
    if (!is_unary && id != "min" && id != "max") fail("unknown name '" + id + "'");
    if (!eat('(')) fail("expected '(' after " + id);
    std::vector<NodePtr> args{expr()};
    while (eat(',')) args.push_back(expr());
    if (!eat(')')) fail("expected ')'");
    if (is_unary && args.size() != 1) fail(id + " takes one argument");
    if (!is_unary && args.size() < 2) fail(id + " takes at least two arguments");
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Call;
    n->fn = id;
    n->args = std::move(args);
    return n;
  }

  const std::string& s_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
  if (dim < 1) throw ValidationError("expression: dimension must be positive");
  Expression e;
  e.root_ = Parser(text, dim).run();
  e.text_ = text;
  e.dim_ = dim;
  return e;
}

double Expression::operator()(const Point& x) const {
  if (x.size() < dim_) throw ValidationError("expression: point has fewer than " + std::to_string(dim_) + " coordinates");
  return root_->eval(x);
}

ScalarField Expression::field() const {
  return [e = *this](const Point& x) { return e(x); };
}

}  // namespace degenlab
