#include <doctest.h>

#include <numbers>
#include <random>

#include "degenlab/error.hpp"
#include "degenlab/pucci.hpp"
#include "support.hpp"

using namespace degenlab;
using degenlab::testing::pt;

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < A.size(); ++i) A(i) = N(rng);
  return 0.5 * (A + A.transpose());
}

}  // namespace

TEST_CASE("pucci_matrix examples") {
  const EllipticityPair ell{1, 2};
  Eigen::Matrix2d X = Eigen::Vector2d(1, -1).asDiagonal();
  CHECK(pucci_matrix(Eigen::Matrix2d::Zero(), ell, PucciSign::Plus) == 0);
  CHECK(pucci_matrix(X, ell, PucciSign::Plus) == doctest::Approx(1));
  CHECK(pucci_matrix(X, ell, PucciSign::Minus) == doctest::Approx(-1));
  Eigen::Matrix2d asym;
  asym << 1, 1, 0, 1;
  CHECK_THROWS_AS(pucci_matrix(asym, ell, PucciSign::Plus), ValidationError);
  // Templated on the scalar.
  Eigen::Matrix2f Xf = X.cast<float>();
  CHECK(pucci_matrix(Xf, ell, PucciSign::Plus) == doctest::Approx(1.0f));
}

TEST_CASE("pucci_matrix algebra on random matrices") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.1, 3);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 2;
    const double lo = U(rng), hi = lo + U(rng);
    const EllipticityPair ell{lo, hi};
    const Eigen::MatrixXd X = random_symmetric(rng, n), Y = random_symmetric(rng, n);
    const double t = U(rng);
    auto P = [&](const Eigen::MatrixXd& A) { return pucci_matrix(A, ell, PucciSign::Plus); };
    auto M = [&](const Eigen::MatrixXd& A) { return pucci_matrix(A, ell, PucciSign::Minus); };
    CHECK(std::abs(P(t * X) - t * P(X)) < 1e-10);
    CHECK(std::abs(P(-X) + M(X)) < 1e-10);
    CHECK(M(X) <= P(X) + 1e-10);
    CHECK(P(X) + M(Y) <= P(X + Y) + 1e-10);
    CHECK(P(X + Y) <= P(X) + P(Y) + 1e-10);
  }
}

TEST_CASE("pucci_apply examples") {
  const auto g = build_grid(make_box(2, -1, 1), 0.125, 2);
  const Index origin = g->nearest_node(pt({0, 0}));
  const auto axis = axis_basis(2);
  const auto wide = default_bases(2, 2);
  const GridFunction saddle = sample(g, [](const Point& x) { return 0.5 * (x[0] * x[0] - x[1] * x[1]); });
  CHECK(pucci_apply(saddle, origin, axis, {1, 2}, PucciSign::Plus) == doctest::Approx(1).epsilon(1e-12));
  const GridFunction bowl = sample(g, [](const Point& x) { return 0.5 * x.squaredNorm(); });
  CHECK(pucci_apply(bowl, origin, wide, {1, 1}, PucciSign::Plus) == doctest::Approx(2).epsilon(1e-12));
  const GridFunction affine = sample(g, [](const Point& x) { return 3 + x[0] - 2 * x[1]; });
  CHECK(std::abs(pucci_apply(affine, origin, wide, {1, 3}, PucciSign::Minus)) < 1e-10);
  CHECK_THROWS_AS(pucci_apply(affine, g->nearest_node(pt({-1, 0})), wide, {1, 3}, PucciSign::Plus), DomainError);
}

TEST_CASE("quadratics diagonalized by a basis are exact") {
  const auto g = build_grid(make_box(2, -1, 1), 0.125, 2);
  const auto wide = default_bases(2, 2);
  const EllipticityPair ell{0.5, 2};
  const Index node = g->nearest_node(pt({0.25, -0.125}));
  for (const auto& basis : wide.bases) {
    Eigen::Matrix2d V;
    V.col(0) = basis[0].cast<double>().normalized();
    V.col(1) = basis[1].cast<double>().normalized();
    for (const Eigen::Vector2d ev : {Eigen::Vector2d(1, -2), Eigen::Vector2d(-0.5, 3), Eigen::Vector2d(2, 1)}) {
      const Eigen::Matrix2d X = V * ev.asDiagonal() * V.transpose();
      const GridFunction u = sample(g, [X](const Point& x) { return 0.5 * x.dot(X * x); });
      for (PucciSign s : {PucciSign::Plus, PucciSign::Minus}) {
        CHECK(std::abs(pucci_apply(u, node, wide, ell, s) - pucci_matrix(X, ell, s)) < 1e-12);
      }
    }
  }
}

TEST_CASE("discrete operator is monotone, homogeneous and dual") {
  const auto g = build_grid(make_box(2, -1, 1), 0.125, 2);
  const auto wide = default_bases(2, 2);
  const EllipticityPair ell{0.5, 2};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  GridFunction u(g);
  for (Index i = 0; i < g->size(); ++i) u[i] = U(rng);
  const Index node = g->nearest_node(pt({0, 0}));
  const double base = pucci_apply(u, node, wide, ell, PucciSign::Plus);
  GridFunction up = u;
  for (Index i = 0; i < g->size(); ++i) {
    if (i != node) up[i] += 0.1 * (U(rng) + 1);
  }
  CHECK(pucci_apply(up, node, wide, ell, PucciSign::Plus) >= base);
  GridFunction center = u;
  center[node] += 0.3;
  CHECK(pucci_apply(center, node, wide, ell, PucciSign::Plus) <= base);
  const GridFunction scaled(g, 2.5 * u.values), neg(g, -u.values);
  CHECK(pucci_apply(scaled, node, wide, ell, PucciSign::Plus) == doctest::Approx(2.5 * base).epsilon(1e-12));
  CHECK(pucci_apply(neg, node, wide, ell, PucciSign::Minus) == doctest::Approx(-base).epsilon(1e-12));
}

TEST_CASE("lambda == Lambda collapses to the axis Laplacian") {
  const auto g = build_grid(make_box(2, -1, 1), 0.125, 2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1, 1);
  GridFunction u(g);
  for (Index i = 0; i < g->size(); ++i) u[i] = U(rng);
  Eigen::VectorXi e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  for (Index node : g->interior()) {
    const double lap = second_difference(u, node, e1) + second_difference(u, node, e2);
    CHECK(pucci_apply(u, node, default_bases(2, 2), {1.5, 1.5}, PucciSign::Plus) == doctest::Approx(1.5 * lap));
    CHECK(pucci_apply(u, node, default_bases(2, 2), {1.5, 1.5}, PucciSign::Minus) == doctest::Approx(1.5 * lap));
  }
}

TEST_CASE("linear_trace_apply") {
  const auto g = build_grid(make_box(2, -1, 1), 0.125, 1);
  const Index node = g->nearest_node(pt({0.25, 0.5}));
  const GridFunction u = sample(g, [](const Point& x) { return x[0] * x[0]; });
  const MatrixField A = [](const Point&) { return Eigen::MatrixXd(Eigen::Vector2d(3, 1).asDiagonal()); };
  CHECK(linear_trace_apply(u, node, A) == doctest::Approx(6).epsilon(1e-12));
  const GridFunction affine = sample(g, [](const Point& x) { return x[0] - x[1]; });
  CHECK(std::abs(linear_trace_apply(affine, node, A)) < 1e-10);
  const MatrixField off = [](const Point&) {
    Eigen::MatrixXd M(2, 2);
    M << 1, 0.1, 0.1, 1;
    return M;
  };
  CHECK_THROWS_AS(linear_trace_apply(u, node, off), UnsupportedOperatorError);
}

TEST_CASE("directional_resolution") {
  CHECK(directional_resolution(axis_basis(2)) == doctest::Approx(std::numbers::pi / 4));
  StencilBasisSet two = default_bases(2, 1);
  CHECK(directional_resolution(two) == doctest::Approx(std::numbers::pi / 8));
  CHECK(directional_resolution(default_bases(2, 2)) < std::numbers::pi / 8);
  CHECK(directional_resolution(default_bases(3, 2)) < directional_resolution(axis_basis(3)));
}

TEST_CASE("basis sets are checked") {
  StencilBasisSet bad = default_bases(2, 2);
  Eigen::VectorXi v(2), w(2);
  v << 1, 1;
  w << 1, 0;
  bad.bases.push_back({v, w});
  CHECK_THROWS_AS(check_basis_set(bad), ValidationError);
  CHECK_NOTHROW(check_basis_set(default_bases(3, 2)));
}
