#include <doctest.h>

#include <random>

#include "degenlab/error.hpp"
#include "degenlab/model.hpp"
#include "support.hpp"

using namespace degenlab;
using degenlab::testing::plain_spec;
using degenlab::testing::pt;

namespace {

DegeneracyLaw law(double p, double q, double a) {
  DegeneracyLaw l;
  l.exponents = make_exponents(constant_field(p), constant_field(q), constant_field(a), make_box(2, -1, 1));
  return l;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("degeneracy_eval closed forms") {
  CHECK(degeneracy_eval(law(2, 4, 0), pt({0.1, 0.2}), 0, 0) == 0);
  CHECK(degeneracy_eval(law(2, 4, 0.5), pt({0, 0}), 1, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(degeneracy_eval(law(1, 3, 1), pt({0, 0}), 2, 0) == doctest::Approx(10).epsilon(1e-15));
  CHECK_THROWS_AS(degeneracy_eval(law(1, 3, 1), pt({2, 0}), 1, 0), DomainError);
}

TEST_CASE("degeneracy_eval monotone in s, floored by eps^q_max, single phase on a = 0") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  ProblemSpec spec = plain_spec(2, 1, 1, 0, constant_field(0), constant_field(0));
  spec.law.exponents = make_exponents([](const Point& x) { return 1.5 + 0.5 * x[0]; },
                                      [](const Point& x) { return 3 + x[1]; },
                                      [](const Point& x) { return std::max(0.0, x[0]); }, spec.domain);
  const double q_max = spec.law.exponents.bounds.q_max;
  for (int k = 0; k < 200; ++k) {
    const Point x = pt({2 * U(rng) - 1, 2 * U(rng) - 1});
    const double s = U(rng), t = s + U(rng), eps = U(rng);
    CHECK(degeneracy_eval(spec.law, x, s, eps) <= degeneracy_eval(spec.law, x, t, eps));
    CHECK(degeneracy_eval(spec.law, x, s, eps) >= std::pow(eps, q_max));
    if (x[0] <= 0) CHECK(degeneracy_eval(spec.law, x, s, eps) == std::pow(eps + s, 1.5 + 0.5 * x[0]));
  }
}

TEST_CASE("continuity_bound") {
  const DegeneracyLaw l = law(1, 2, 1);
  const LipschitzModuli zero{};
  const LipschitzModuli grad_p{1, 0, 0};
  CHECK(continuity_bound(l, pt({0.1, 0.2}), pt({0.1, 0.2}), 0.5, 0.1, grad_p) == 0);
  CHECK(continuity_bound(l, pt({0.1, 0.2}), pt({-0.4, 0.9}), 0.5, 0.1, zero) == 0);
  CHECK(continuity_bound(law(1, 1, 0), pt({0, 0}), pt({1, 0}), 0.5, 0.5, grad_p) == doctest::Approx(0).epsilon(1e-15));
  CHECK(continuity_bound(l, pt({0, 0}), pt({0.5, 0}), 0.1, 0.1, grad_p) > 0);
  CHECK_THROWS_AS(continuity_bound(l, pt({0, 0}), pt({1, 0}), 1.5, 0.5, grad_p), OutOfRangeError);
}

TEST_CASE("validate_problem labels") {
  const ProblemSpec good = plain_spec(2, 2, 4, 0, constant_field(1), constant_field(0));
  CHECK(validate_problem(good).empty());

  ProblemSpec bad = good;
  bad.law.exponents = make_exponents([](const Point& x) { return std::abs(x[0]); }, constant_field(4),
                                     constant_field(0), bad.domain);
  CHECK(contains(validate_problem(bad), "A5: p_min must be > 0"));

  ProblemSpec dc = good;
  dc.variant = DeadCoreVariant{3.0, constant_field(1)};
  CHECK(contains(validate_problem(dc), "Maineq: ς out of range"));

  ProblemSpec ob = good;
  ob.variant = ObstacleVariant{constant_field(1)};
  CHECK(contains(validate_problem(ob), "Eq1: obstacle exceeds boundary data"));

  ProblemSpec graph = good;
  graph.domain.boundary_graph = [](const Point& y) { return 0.1 + y[0]; };
  CHECK(contains(validate_problem(graph), "Condphi: phi(0) and Dphi(0) must vanish"));

  ProblemSpec ell = good;
  ell.op.ellipticity = {2, 1};
  CHECK(contains(validate_problem(ell), "A1: ellipticity requires 0 < lambda <= Lambda < inf"));
}

TEST_CASE("cached bounds equal sampled extrema") {
  const DomainSpec box = make_box(2, -1, 1);
  const auto ex = make_exponents([](const Point& x) { return 2 + x[0]; }, constant_field(5),
                                 [](const Point& x) { return x[1] * x[1]; }, box);
  CHECK(ex.bounds.p_min == doctest::Approx(1));
  CHECK(ex.bounds.p_max == doctest::Approx(3));
  CHECK(ex.bounds.a_max == doctest::Approx(1));
  CHECK(ex.bounds.a_min == doctest::Approx(0));
}

TEST_CASE("log_holder_check") {
  std::vector<ExponentSample> constant;
  for (int i = 0; i < 10; ++i) constant.push_back({pt({0.01 * i, 0}), 2, 3});
  const auto r0 = log_holder_check(constant, {0.5}, 1.0);
  CHECK(r0.max_statistic == 0);
  CHECK(r0.pass);

  // p(x) = c / ln(1/|x|): the pair (x, 0) gives exactly c.
  const double c = 0.3;
  std::vector<ExponentSample> log_profile{{pt({0, 0}), 1, 1}};
  for (double r : {1e-2, 1e-3, 1e-4}) log_profile.push_back({pt({r, 0}), 1 + c / std::log(1 / r), 1});
  const auto r1 = log_holder_check(log_profile, {0.5}, 1.0);
  CHECK(r1.max_statistic == doctest::Approx(c).epsilon(0.05));
  CHECK(r1.pass);

  std::vector<ExponentSample> jump{{pt({-5e-7, 0}), 1, 2}, {pt({5e-7, 0}), 1.5, 2}};
  const auto r2 = log_holder_check(jump, {0.5}, 1.0);
  CHECK(r2.max_statistic == doctest::Approx(0.5 * std::log(1e6)).epsilon(1e-9));
  CHECK_FALSE(r2.pass);

  std::vector<ExponentSample> coincident{{pt({0, 0}), 1, 2}, {pt({0, 0}), 1.5, 2}, {pt({0.1, 0}), 1, 2}};
  CHECK_FALSE(log_holder_check(coincident, {0.5}, 1.0).warnings.empty());
  CHECK_THROWS_AS(log_holder_check({constant[0]}, {0.5}, 1.0), ValidationError);
}
