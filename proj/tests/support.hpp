#pragma once

// Small builders shared by the unit tests and the acceptance run.

#include <cmath>

#include "degenlab/model.hpp"

namespace degenlab::testing {

inline ProblemSpec plain_spec(int dim, double p, double q, double a, ScalarField f, ScalarField g, double lo = -1,
                              double hi = 1, double lambda = 1, double Lambda = 1) {
  ProblemSpec spec;
  spec.domain = make_box(dim, lo, hi);
  spec.op.kind = OperatorKind::PucciPlus;
  spec.op.ellipticity = {lambda, Lambda};
  spec.law.exponents = make_exponents(constant_field(p), constant_field(q), constant_field(a), spec.domain);
  spec.source = std::move(f);
  spec.boundary = std::move(g);
  return spec;
}

inline Point pt(std::initializer_list<double> v) {
  Point x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

}  // namespace degenlab::testing
