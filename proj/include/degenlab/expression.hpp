#pragma once

// Closed-form scalar fields written as text, e.g. "2 + 0.5*sin(x1)".
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Names: x1..xn, r (= |x|), pi. Functions: sin cos exp abs sqrt log (one argument), min max (two or more).

#include <memory>
#include <string>

#include "degenlab/model.hpp"

namespace degenlab {

class Expression {
 public:
  /// Throws ValidationError with the offending column on malformed text or unknown names.
  static Expression parse(const std::string& text, int dim);

  double operator()(const Point& x) const;
  const std::string& text() const { return text_; }
  int dim() const { return dim_; }
  ScalarField field() const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  int dim_ = 0;
};

}  // namespace degenlab
