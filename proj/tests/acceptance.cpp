// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "degenlab/barriers.hpp"
#include "degenlab/cli.hpp"
#include "degenlab/error.hpp"
#include "degenlab/pucci.hpp"
#include "degenlab/reglab.hpp"
#include "degenlab/solver.hpp"
#include "support.hpp"

using namespace degenlab;
using degenlab::testing::plain_spec;
using degenlab::testing::pt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [violated]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sup_error(const GridFunction& u, const GridFunction& exact) {
  double e = 0;
  for (Index node = 0; node < u.grid->size(); ++node) {
    if (u.grid->kind(node) != NodeKind::Exterior) e = std::max(e, std::abs(u[node] - exact[node]));
  }
  return e;
}

// p = 2, q = 4, a = 0, lambda = Lambda = 1, f = 1 on [-1, 1]^2 with the exact radial data.
ProblemSpec radial_spec() {
  const auto [c, beta] = radial_constants(2, 2, std::nullopt);
  return plain_spec(2, 2, 4, 0, constant_field(1),
                    [c = c, beta = beta](const Point& x) { return c * std::pow(x.norm(), beta); });
}

struct RadialRun {
  SolveResult res;
  double error = 0;
  double seconds = 0;
};

RadialRun radial_run(double h) {
  SolveOptions o;
  o.h = h;
  o.threads = 1;
  const ProblemSpec spec = radial_spec();
  const auto grid = build_problem_grid(spec, o);
  const auto t0 = std::chrono::steady_clock::now();
  RadialRun run{solve(spec, grid, o), 0, 0};
  run.seconds = seconds_since(t0);
  run.error = sup_error(run.res.u, exact_radial_solution(2, 2, std::nullopt, grid, pt({0, 0})).u);
  return run;
}

const RadialRun& radial64() {
  static const RadialRun run = radial_run(1.0 / 64);
  return run;
}

Outcome criterion1() {
  Outcome o;
  const RadialRun& fine = radial64();
  const RadialRun coarse = radial_run(1.0 / 32);
  o.require(fine.res.report.converged, "converged");
  o.require(fine.error <= 0.05, "sup error at h=1/64 " + num(fine.error) + " <= 0.05");
  const double ratio = fine.error / coarse.error;
  o.require(ratio < 0.85, "error ratio 1/32 -> 1/64 " + num(ratio) + " < 0.85");
  const auto prof = oscillation_profile(fine.res.u, pt({0, 0}), {0.25, 0.125, 0.0625, 0.03125});
  const auto fit = fit_exponent(prof, 1);
  o.require(std::abs(fit.alpha - 1.0 / 3) <= 0.07, "order-1 alpha " + num(fit.alpha) + " in 1/3 +- 0.07");
  o.require(fine.seconds <= 60, "single-thread runtime " + num(fine.seconds) + " s <= 60 s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  struct Case {
    double p, sigma;
  };
  for (const Case cs : {Case{1, 0.5}, Case{2, 1}}) {
    const auto [c, beta] = radial_constants(cs.p, 1, cs.sigma);
    const ScalarField oracle = [c = c, beta = beta](const Point& x) { return c * std::pow(std::max(x[0], 0.0), beta); };
    ProblemSpec spec = plain_spec(1, cs.p, cs.p, 0, constant_field(0), oracle);
    spec.variant = DeadCoreVariant{cs.sigma, constant_field(1)};
    SolveOptions opts;
    opts.h = 2.0 / 200;  // 201 nodes on [-1, 1]
    const SolveResult res = solve_deadcore(spec, opts);
    const GridFunction exact = sample_with_boundary(res.u.grid, oracle, oracle);
    const double err = sup_error(res.u, exact);
    const std::string tag = "p=" + num(cs.p) + ",sigma=" + num(cs.sigma) + ": ";
    o.require(res.report.converged, tag + "converged");
    o.require(err <= 0.05 * c, tag + "sup error " + num(err) + " <= 5% of amplitude " + num(0.05 * c));
    // Free boundary: last interior node still inside the discrete dead core.
    const Grid& g = *res.u.grid;
    Index fb = -1;
    for (Index node : g.interior()) {
      if (res.u[node] <= 10 * opts.tol_residual && (fb < 0 || g.point(node)[0] > g.point(fb)[0])) fb = node;
    }
    if (fb < 0) {
      o.require(false, tag + "no dead core detected");
      continue;
    }
    const auto prof = oscillation_profile(res.u, g.point(fb), {0.4, 0.2, 0.1, 0.05});
    const auto fit = fit_exponent(prof, 0);
    const double target = deadcore_exponent(cs.p, cs.sigma);
    o.require(std::abs(fit.slope - target) <= 0.1 * target, tag + "free boundary at x=" + num(g.point(fb)[0]) +
                                                                   ", order-0 exponent " + num(fit.slope) +
                                                                   " within " + num(target) + " +- 10%");
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  const double p = 1.5;
  const ProblemSpec base = plain_spec(2, p, p, 0, constant_field(0.7), constant_field(0.2), -1, 1, 0.5, 2);
  SolveOptions opts;
  opts.h = 1.0 / 16;
  const auto grid = build_problem_grid(base, opts);
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(-1, 1);
  GridFunction u(grid);
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) != NodeKind::Exterior) u[node] = U(rng);
  }
  const GridFunction r = residual(base, u, 0);
  double worst = 0;
  for (double t : {0.5, 2.0, 10.0}) {
    const double s = std::pow(t, p + 1);
    ProblemSpec scaled = base;
    scaled.source = constant_field(s * 0.7);
    const GridFunction rt = residual(scaled, GridFunction(grid, t * u.values), 0);
    for (Index node : grid->interior()) {
      worst = std::max(worst, std::abs(rt[node] - s * r[node]) / std::max(1.0, std::abs(s * r[node])));
    }
  }
  o.require(worst <= 1e-12, "max relative deviation " + num(worst) + " <= 1e-12 over t in {0.5, 2, 10}");
  return o;
}

Outcome criterion4() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  int held = 0;
  double worst = 0;
  SolveOptions opts;
  opts.h = 2.0 / 32;  // 33 x 33 nodes
  for (int k = 0; k < 25; ++k) {
    const double p = 0.5 + 1.5 * U(rng), q = p + U(rng), a = U(rng);
    const double lambda = 0.3 + 0.7 * U(rng), Lambda = 1 + 2 * U(rng);
    const double A = 0.2 + U(rng), B = 0.5 * U(rng), C = 0.5 * U(rng), w = 1 + 3 * U(rng);
    const double D = 2 * U(rng) - 1, E = U(rng), F = 0.3 * U(rng);
    const ScalarField f2 = [=](const Point& x) { return A + B * (1 + std::sin(w * x[0])); };
    const ScalarField f1 = [=](const Point& x) { return A + B * (1 + std::sin(w * x[0])) - C * (1 + std::cos(x[1])) / 2; };
    const ScalarField g2 = [=](const Point& x) { return D * x[0] + E * x[1] * x[1]; };
    const ScalarField g1 = [=](const Point& x) { return D * x[0] + E * x[1] * x[1] + F; };
    ProblemSpec s1 = plain_spec(2, p, q, a, f1, g1, -1, 1, lambda, Lambda);
    ProblemSpec s2 = plain_spec(2, p, q, a, f2, g2, -1, 1, lambda, Lambda);
    const OperatorKind kind = k % 2 ? OperatorKind::PucciMinus : OperatorKind::PucciPlus;
    s1.op.kind = s2.op.kind = kind;
    const auto u1 = solve(s1, opts), u2 = solve(s2, opts);
    const auto cmp = comparison_check(u1.u, u2.u, 1e-8);
    held += cmp.holds;
    worst = std::max(worst, cmp.worst_violation);
  }
  o.require(held == 25, std::to_string(held) + "/25 pairs satisfy u1 >= u2 - 1e-8 (worst violation " + num(worst) + ")");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto grid = build_grid(make_box(2, -1, 1), 1.0 / 16, 2);
  const auto bases = default_bases(2, 2);
  const EllipticityPair ell{0.4, 2.5};
  double exact_gap = 0;
  for (const auto& basis : bases.bases) {
    Eigen::Matrix2d V;
    V.col(0) = basis[0].cast<double>().normalized();
    V.col(1) = basis[1].cast<double>().normalized();
    for (const Eigen::Vector2d ev : {Eigen::Vector2d(1, -2), Eigen::Vector2d(3, 0.5), Eigen::Vector2d(-1, -0.25)}) {
      const Eigen::Matrix2d X = V * ev.asDiagonal() * V.transpose();
      const GridFunction u = sample(grid, [X](const Point& x) { return 0.5 * x.dot(X * x); });
      for (Index node : grid->interior()) {
        for (PucciSign s : {PucciSign::Plus, PucciSign::Minus}) {
          exact_gap = std::max(exact_gap, std::abs(pucci_apply(u, node, bases, ell, s) - pucci_matrix(X, ell, s)));
        }
      }
    }
  }
  o.require(exact_gap <= 1e-12, "stencil-aligned quadratics exact to " + num(exact_gap));

  // Oracle: eigen-decomposition done here, independently of pucci_matrix.
  auto oracle = [](const Eigen::MatrixXd& X, const EllipticityPair& e, bool plus) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(X).eigenvalues();
    double s = 0;
    for (int i = 0; i < ev.size(); ++i) s += ev[i] >= 0 ? (plus ? e.Lambda : e.lambda) * ev[i] : (plus ? e.lambda : e.Lambda) * ev[i];
    return s;
  };
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.1, 3);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 2;
    const double lo = U(rng);
    const EllipticityPair e{lo, lo + U(rng)};
    Eigen::MatrixXd X(n, n), Y(n, n);
    for (int i = 0; i < X.size(); ++i) X(i) = N(rng), Y(i) = N(rng);
    X = 0.5 * (X + X.transpose()).eval();
    Y = 0.5 * (Y + Y.transpose()).eval();
    const double t = U(rng);
    auto P = [&](const Eigen::MatrixXd& A) { return pucci_matrix(A, e, PucciSign::Plus); };
    auto M = [&](const Eigen::MatrixXd& A) { return pucci_matrix(A, e, PucciSign::Minus); };
    worst = std::max({worst, std::abs(P(X) - oracle(X, e, true)), std::abs(M(X) - oracle(X, e, false)),
                      std::abs(P(t * X) - t * P(X)), std::abs(P(-X) + M(X)), M(X) - P(X),
                      P(X) + M(Y) - P(X + Y), P(X + Y) - P(X) - P(Y)});
  }
  o.require(worst <= 1e-10, "100 random matrices: oracle, homogeneity, duality, ordering, subadditivity within " + num(worst));
  return o;
}

Outcome criterion6() {
  Outcome o;
  // Half-space {x2 > 0} inside [-1, 1]^2, Lipschitz data, f = 0.
  ProblemSpec spec = plain_spec(2, 1, 1, 0, constant_field(0),
                                [](const Point& x) { return 0.5 * std::abs(x[0]) + 0.25 * x[1]; });
  spec.domain.boundary_graph = [](const Point&) { return 0.0; };
  SolveOptions opts;
  opts.h = 1.0 / 64;
  const auto grid = build_problem_grid(spec, opts);
  const double gamma = 0.2, r = 0.1;
  const double K = graph_curvature_bound(spec.domain, *grid);
  const DistanceDelta dd = distance_barrier_delta(spec, gamma, r, K);
  o.require(!dd.cap_limited && std::abs(dd.bracket) <= 1e-8,
            "bisection delta0=" + num(dd.delta0) + " with bracket " + num(dd.bracket) + " <= 1e-8");
  o.require(dd.margin_at_half > 0, "margin at delta0/2 " + num(dd.margin_at_half) + " > 0");
  o.require(all_hold(reverify(dd.params)), "recorded inequalities re-verify");

  const GridFunction v = distance_barrier(spec, grid, dd.delta0, gamma, r);
  std::vector<Index> collar;
  for (Index node : grid->interior()) {
    if (boundary_distance(spec.domain, grid->point(node)) < dd.delta0) collar.push_back(node);
  }
  const double tol = 10 * opts.h;
  const auto check = verify_supersolution(v, spec, BarrierSide::Upper, tol, &collar);
  o.require(check.pass && check.checked > 0, "barrier supersolution on " + std::to_string(check.checked) +
                                                 " collar nodes, worst margin " + num(check.worst_margin) +
                                                 " <= 10h");

  const SolveResult res = solve(spec, grid, opts);
  const auto growth = boundary_growth_check(res.u, spec, dd.delta0, gamma);
  o.require(res.report.converged && growth.pass && !growth.verdicts.empty(),
            "boundary growth on " + std::to_string(growth.verdicts.size()) + " nodes, worst excess " +
                num(growth.worst_excess));
  return o;
}

Outcome criterion7() {
  Outcome o;
  // a = 0: g(t) = Xi2 k t^(p+1) - m with k = ((p+2)/(p+1))^(p+1), so T0 = (m/(Xi2 k))^(1/(p+1)).
  double worst_t = 0, worst_g = 0;
  for (double p : {0.5, 1.0, 2.0}) {
    for (double m : {0.1, 1.0, 7.0}) {
      ProblemSpec spec = plain_spec(2, p, p + 1, 0, constant_field(m), constant_field(0), -1, 1, 0.5, 1.5);
      const auto nd = nondegeneracy_constant(spec, m);
      const double k = std::pow((p + 2) / (p + 1), p + 1);
      const double closed = std::pow(m / (nd.xi2 * k), 1 / (p + 1));
      worst_t = std::max(worst_t, std::abs(nd.T0 - closed));
      worst_g = std::max(worst_g, std::abs(nd.residual));
    }
  }
  o.require(worst_t <= 1e-8, "closed-form T0 matched to " + num(worst_t));
  o.require(worst_g <= 1e-10, "|g(T0)| <= " + num(worst_g));

  const ProblemSpec radial = radial_spec();
  const auto nd = nondegeneracy_constant(radial, 1.0);
  const auto rep = nondegeneracy_check(radial64().res.u, pt({0, 0}), {0.1, 0.2}, nd.c_frak,
                                       radial.law.exponents.bounds.p_min);
  std::string quotients;
  for (const auto& v : rep.verdicts) quotients += (quotients.empty() ? "" : ", ") + num(v.quotient);
  o.require(rep.all_pass() && rep.verdicts.size() == 2,
            "radial benchmark quotients {" + quotients + "} >= c = T0/2 = " + num(nd.c_frak));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const ProblemSpec spec = radial_spec();
  SolveOptions opts;
  opts.h = 1.0 / 64;
  const double tau = 0.5, kappa = std::pow(tau, 1 + 1.0 / 3);
  const auto scaled = scale_equivariance_test(spec, kappa, tau, pt({0, 0}), opts);
  o.require(scaled.max_mismatch <= 10 * opts.tol_residual,
            "tau=1/2 mismatch " + num(scaled.max_mismatch) + " <= 10 tol_residual");
  const auto identity = scale_equivariance_test(spec, 1, 1, pt({0, 0}), opts);
  o.require(identity.max_mismatch <= 1e-12, "kappa=tau=1 mismatch " + num(identity.max_mismatch) + " <= 1e-12");
  return o;
}

Outcome criterion9() {
  Outcome o;
  SolveOptions opts;
  opts.h = 2.0 / 200;
  const double tol = opts.tol_residual;
  {
    ProblemSpec spec = plain_spec(1, 1, 1, 0, constant_field(1), constant_field(0));
    spec.variant = ObstacleVariant{constant_field(0)};
    const SolveResult res = solve_obstacle(spec, opts);
    o.require(res.u.values.minCoeff() >= 0, "g=0: u >= 0 exactly (min " + num(res.u.values.minCoeff()) + ")");
    o.require(res.report.complementarity_residual <= tol,
              "g=0: complementarity residual " + num(res.report.complementarity_residual) + " <= tol");
  }
  // With g = 0 the obstacle is active everywhere, so the growth exponent is read on g = 0.25.
  ProblemSpec spec = plain_spec(1, 1, 1, 0, constant_field(1), constant_field(0.25));
  spec.variant = ObstacleVariant{constant_field(0)};
  const SolveResult res = solve_obstacle(spec, opts);
  o.require(res.u.values.minCoeff() >= 0, "g=0.25: u >= 0 exactly");
  o.require(res.report.complementarity_residual <= tol,
            "g=0.25: complementarity residual " + num(res.report.complementarity_residual) + " <= tol");
  const Grid& g = *res.u.grid;
  Index fb = -1;
  for (Index node : g.interior()) {
    const double x = g.point(node)[0];
    if (x > 0 && res.u[node] <= 10 * tol && (fb < 0 || x > g.point(fb)[0])) fb = node;
  }
  if (fb < 0) {
    o.require(false, "no contact node detected");
    return o;
  }
  const auto fit = fit_exponent(oscillation_profile(res.u, g.point(fb), {0.32, 0.16, 0.08, 0.04}), 0);
  const double target = 1 + 1.0 / (1 + 1) - 0.1;
  o.require(fit.slope >= target, "free boundary x=" + num(g.point(fb)[0]) + ", order-0 exponent " + num(fit.slope) +
                                     " >= " + num(target));
  return o;
}

Outcome criterion10() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "degenlab_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string config = R"json({
    "schema_version": 1,
    "experiment": "probe",
    "problem": {
      "domain": {"lower": [-1, -1], "upper": [1, 1]},
      "operator": {"kind": "pucci_plus", "lambda": 1, "Lambda": 1},
      "law": {"p": {"const": 2}, "q": {"const": 4}, "a": {"const": 0}},
      "source": {"const": 1},
      "boundary": {"expr": "0.75^(4/3) * r^(4/3)"}
    },
    "solve": {"h": 0.015625, "sweep_mode": "jacobi"},
    "probe": {"centers": [[0, 0], [0.25, 0.25]], "radii": [0.25, 0.125, 0.0625, 0.03125]}
  })json";
  std::ofstream(dir / "radial.json") << config;
  std::vector<std::string> bodies;
  for (int threads : {1, 2, 8}) {
    const fs::path out = dir / ("t" + std::to_string(threads));
    const int code = run_cli({"degenlab", "probe", "--config", (dir / "radial.json").string(), "--out", out.string(),
                              "--threads", std::to_string(threads)});
    o.require(code == kExitOk, std::to_string(threads) + " threads exit " + std::to_string(code));
    std::ifstream in(out / "profiles.csv", std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    bodies.push_back(s.str());
  }
  const bool same = !bodies[0].empty() && bodies[0] == bodies[1] && bodies[0] == bodies[2];
  o.require(same, "profiles.csv byte-identical across 1, 2, 8 threads (" + std::to_string(bodies[0].size()) + " bytes)");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"radial benchmark", criterion1},       {"dead-core exponent", criterion2},
      {"homogeneity", criterion3},            {"discrete comparison", criterion4},
      {"pucci oracles", criterion5},          {"barrier certification", criterion6},
      {"non-degeneracy", criterion7},         {"scaling equivariance", criterion8},
      {"obstacle", criterion9},               {"determinism", criterion10}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    failed += !out.pass;
    std::printf("[%s] criterion %zu (%s): %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
