#include <doctest.h>

#include <random>

#include "degenlab/error.hpp"
#include "degenlab/grid.hpp"
#include "support.hpp"

using namespace degenlab;
using degenlab::testing::pt;

TEST_CASE("classification on the unit square") {
  const auto g1 = build_grid(make_box(2, 0, 1), 0.5, 1);
  CHECK(g1->interior().size() == 1);
  CHECK(g1->dirichlet().size() == 8);
  const auto g2 = build_grid(make_box(2, 0, 1), 0.25, 1);
  CHECK(g2->interior().size() == 9);
  CHECK_THROWS_AS(build_grid(make_box(2, 0, 1), 1.0, 1), ConfigurationError);
  CHECK_THROWS_AS(build_grid(make_box(2, 0, 1), 0.3, 1), ConfigurationError);
}

TEST_CASE("half-plane graph keeps interior nodes above it") {
  DomainSpec d = make_box(2, -1, 1);
  d.boundary_graph = [](const Point&) { return 0.0; };
  const auto g = build_grid(d, 0.5, 1);
  CHECK_FALSE(g->interior().empty());
  for (Index node : g->interior()) CHECK(g->point(node)[1] > 0);
  for (Index node : g->dirichlet()) {
    const Point t = g->trace(node);
    const bool on_graph = std::abs(t[1]) < 1e-12;
    const bool on_face = std::abs(std::abs(t[0]) - 1) < 1e-12 || std::abs(t[1] - 1) < 1e-12;
    CHECK((on_graph || on_face));
  }
}

TEST_CASE("traces on box faces are exact projections") {
  const auto g = build_grid(make_box(2, -1, 1), 0.25, 1);
  for (Index node : g->dirichlet()) {
    const Point x = g->point(node);
    CHECK((g->trace(node) - x).norm() < 1e-12);
  }
}

TEST_CASE("gradient and second differences") {
  const auto g = build_grid(make_box(2, -1, 1), 0.1, 1);
  const Index origin = g->nearest_node(pt({0, 0}));
  const GridFunction affine = sample(g, [](const Point& x) { return 0.5 + 2 * x[0] - 3 * x[1]; });
  const Point b = gradient(affine, origin);
  CHECK(b[0] == doctest::Approx(2).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(-3).epsilon(1e-12));
  const GridFunction sq = sample(g, [](const Point& x) { return x.squaredNorm(); });
  CHECK(gradient(sq, origin).norm() < 1e-14);
  const GridFunction cube = sample(g, [](const Point& x) { return x[0] * x[0] * x[0]; });
  const Index at_09 = g->nearest_node(pt({0.9, 0}));
  CHECK(gradient(cube, at_09)[0] == doctest::Approx((1.0 - std::pow(0.8, 3)) / 0.2).epsilon(1e-10));
  CHECK_THROWS_AS(gradient(cube, g->nearest_node(pt({1, 0}))), DomainError);

  Eigen::VectorXi e1(2), diag(2), far(2);
  e1 << 1, 0;
  diag << 1, 1;
  far << 30, 0;
  CHECK(std::abs(second_difference(affine, origin, diag)) < 1e-10);
  const GridFunction x1sq = sample(g, [](const Point& x) { return x[0] * x[0]; });
  CHECK(second_difference(x1sq, origin, e1) == doctest::Approx(2).epsilon(1e-10));
  const GridFunction x1x2 = sample(g, [](const Point& x) { return x[0] * x[1]; });
  CHECK(second_difference(x1x2, g->nearest_node(pt({0.3, -0.2})), diag) == doctest::Approx(1).epsilon(1e-10));
  CHECK_THROWS_AS(second_difference(x1x2, origin, far), DomainError);
}

TEST_CASE("difference operators are linear and blind to affine parts") {
  const auto g = build_grid(make_box(2, -1, 1), 0.125, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  GridFunction u(g), w(g);
  for (Index i = 0; i < g->size(); ++i) u[i] = U(rng), w[i] = U(rng);
  const GridFunction ell = sample(g, [](const Point& x) { return 1 - 2 * x[0] + 0.5 * x[1]; });
  const double a = 0.7, b = -1.3;
  GridFunction mix(g, a * u.values + b * w.values), shifted(g, u.values + ell.values);
  Eigen::VectorXi v(2);
  v << 2, -1;
  for (Index node : g->interior()) {
    CHECK((gradient(mix, node) - (a * gradient(u, node) + b * gradient(w, node))).norm() < 1e-12);
    CHECK(std::abs(second_difference(mix, node, v) - a * second_difference(u, node, v) -
                   b * second_difference(w, node, v)) < 1e-10);
    CHECK(std::abs(second_difference(shifted, node, v) - second_difference(u, node, v)) < 1e-10);
  }
}

TEST_CASE("ball_nodes") {
  const auto g = build_grid(make_box(2, -1, 1), 0.25, 1);
  const Point c = pt({0, 0});
  CHECK(ball_nodes(*g, c, 0.1, false).size() == 1);
  CHECK(ball_nodes(*g, c, 1.1 * 0.25, false).size() == 5);
  // |(1,1)| h = 1.414 h <= 1.5 h, so the diagonal neighbours join as well.
  CHECK(ball_nodes(*g, c, 1.5 * 0.25, false).size() == 9);
  CHECK(ball_nodes(*g, c, 10, false).size() == static_cast<std::size_t>(g->size()));
  const auto shell = ball_nodes(*g, c, 0.5, true);
  for (Index node : shell) {
    const double d = g->point(node).norm();
    CHECK(d > 0.25);
    CHECK(d <= 0.5 + 1e-12);
  }
  CHECK_THROWS(ball_nodes(*g, c, 0.3, true));
}

TEST_CASE("require_finite") {
  const auto g = build_grid(make_box(1, -1, 1), 0.5, 1);
  GridFunction u(g);
  CHECK_NOTHROW(require_finite(u, "test"));
  u[1] = std::nan("");
  CHECK_THROWS_AS(require_finite(u, "test"), NumericFailure);
}
