#include "degenlab/reglab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "degenlab/barriers.hpp"
#include "degenlab/error.hpp"

namespace degenlab {

namespace {

Index require_node(const Grid& grid, const Point& x0, const char* where) {
  if (!grid.is_node(x0)) throw ValidationError(std::string(where) + ": x0 must be a grid node");
  return grid.nearest_node(x0);
}

}  // namespace

OscillationProfile oscillation_profile(const GridFunction& u, const Point& x0, const std::vector<double>& radii) {
  const Grid& grid = *u.grid;
  const Index center = require_node(grid, x0, "oscillation_profile");
  if (grid.kind(center) != NodeKind::Interior) throw DomainError("oscillation_profile: x0 must be an interior node");
  if (radii.empty()) throw ValidationError("oscillation_profile: no radii");
  const int n = grid.dim();
  const Point xc = grid.point(center);
  const Point grad = gradient(u, center);
  const double u0 = u[center];

  OscillationProfile prof;
  prof.center = xc;
  prof.radii = radii;
  prof.gradient_norm = grad.norm();
  std::vector<double> lsq_raw;
  for (double r : radii) {
    if (r < 2 * grid.h() - 1e-12) throw ValidationError("oscillation_profile: radii must be >= 2h");
    const std::vector<Index> nodes = ball_nodes(grid, xc, r, false);
    double o0 = 0, o1 = 0;
    for (Index node : nodes) {
      const Point dx = grid.point(node) - xc;
      o0 = std::max(o0, std::abs(u[node] - u0));
      o1 = std::max(o1, std::abs(u[node] - u0 - grad.dot(dx)));
    }
    double lsq = o1;
    if (static_cast<int>(nodes.size()) > n + 1) {
      Eigen::MatrixXd A(nodes.size(), n + 1);
      Eigen::VectorXd b(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        A(i, 0) = 1;
        A.row(i).tail(n) = (grid.point(nodes[i]) - xc).transpose() / r;
        b[i] = u[nodes[i]];
      }
      const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
      lsq = std::min(lsq, (A * coef - b).cwiseAbs().maxCoeff());
    }
    prof.osc0.push_back(o0);
    prof.osc1_grad.push_back(o1);
    lsq_raw.push_back(lsq);
  }
  // An affine fit on a larger ball is admissible on every smaller one.
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double best = lsq_raw[i];
    for (std::size_t j = 0; j < radii.size(); ++j) {
      if (radii[j] >= radii[i]) best = std::min(best, lsq_raw[j]);
    }
    prof.osc1_lsq.push_back(best);
  }
  return prof;
}

std::vector<double> default_radii(const Grid& grid, const Point& x0) {
  const DomainSpec& d = grid.domain();
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d.dim(); ++i) dist = std::min({dist, x0[i] - d.lower[i], d.upper[i] - x0[i]});
  dist = std::min(dist, d.height_above_graph(x0));
  std::vector<double> radii;
  for (double r = dist / 4; r >= 4 * grid.h() - 1e-12; r /= 2) radii.push_back(r);
  if (radii.empty()) throw ConfigurationError("default_radii: x0 too close to the boundary for h");
  return radii;
}

ExponentEstimate fit_power_law(const std::vector<double>& r, const std::vector<double>& osc, int order) {
  if (r.size() != osc.size()) throw ValidationError("fit_power_law: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > 0 && osc[i] > 1e-14) {
      xs.push_back(std::log(r[i]));
      ys.push_back(std::log(osc[i]));
    }
  }
  if (xs.size() < 3) throw DegenerateFitError("fit_exponent: fewer than 3 radii with oscillation above 1e-14");
  const Eigen::Map<const Eigen::VectorXd> X(xs.data(), static_cast<Index>(xs.size()));
  const Eigen::Map<const Eigen::VectorXd> Y(ys.data(), static_cast<Index>(ys.size()));
  const double mx = X.mean(), my = Y.mean();
  const Eigen::VectorXd dx = X.array() - mx, dy = Y.array() - my;
  const double sxx = dx.squaredNorm();
  if (!(sxx > 0)) throw DegenerateFitError("fit_exponent: radii must not all coincide");
  ExponentEstimate e;
  e.order = order;
  e.slope = dx.dot(dy) / sxx;
  e.intercept = my - e.slope * mx;
  const double ss_tot = dy.squaredNorm();
  const double ss_res = (dy - e.slope * dx).squaredNorm();
  e.r_squared = ss_tot > 0 ? std::clamp(1 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  e.alpha = order == 1 ? e.slope - 1 : e.slope;
  e.r_min = std::exp(X.minCoeff());
  e.r_max = std::exp(X.maxCoeff());
  e.used = static_cast<int>(xs.size());
  return e;
}

ExponentEstimate fit_exponent(const OscillationProfile& profile, int order) {
  if (order != 0 && order != 1) throw ValidationError("fit_exponent: order must be 0 or 1");
  return fit_power_law(profile.radii, order == 0 ? profile.osc0 : profile.osc1_lsq, order);
}

double sharp_alpha(double alpha_F, double p_max, double beta_g, bool alpha_F_attained) {
  if (!(alpha_F > 0 && alpha_F <= 1)) throw ValidationError("sharp_alpha: alpha_F must lie in (0, 1]");
  if (!(p_max > 0)) throw ValidationError("sharp_alpha: p_max must be positive");
  if (!(beta_g > 0 && beta_g <= 1)) throw ValidationError("sharp_alpha: beta_g must lie in (0, 1]");
  const double a = alpha_F_attained ? alpha_F : alpha_F - kAlphaFMargin;
  return std::min({a, 1 / (p_max + 1), beta_g});
}

double pointwise_alpha(double p_at_x0) {
  if (!(p_at_x0 > 0)) throw ValidationError("pointwise_alpha: p must be positive");
  return 1 / (1 + p_at_x0);
}

double deadcore_exponent(double p_max, double sigma) {
  if (!(p_max > 0)) throw ValidationError("deadcore_exponent: p_max must be positive");
  if (!(sigma >= 0 && sigma < p_max + 1)) throw ValidationError("deadcore_exponent: sigma out of range");
  return (p_max + 2) / (p_max + 1 - sigma);
}

bool NondegeneracyReport::all_pass() const {
  bool any = false;
  for (const auto& v : verdicts) {
    if (v.skipped) continue;
    any = true;
    if (!v.pass) return false;
  }
  return any;
}

NondegeneracyReport nondegeneracy_check(const GridFunction& u, const Point& x0, const std::vector<double>& radii,
                                        double c0, double p_min) {
  if (!(p_min > 0)) throw ValidationError("nondegeneracy_check: p_min must be positive");
  const Grid& grid = *u.grid;
  const Index center = require_node(grid, x0, "nondegeneracy_check");
  const Point xc = grid.point(center);
  const double power = 1 + 1 / (p_min + 1);
  NondegeneracyReport rep;
  for (double r : radii) {
    NondegeneracyVerdict v;
    v.r = r;
    std::vector<Index> shell;
    try {
      shell = ball_nodes(grid, xc, r, true);
    } catch (const Error& e) {
      v.skipped = true;
      rep.warnings.push_back("radius " + std::to_string(r) + " skipped: " + e.what());
      rep.verdicts.push_back(v);
      continue;
    }
    double q = -std::numeric_limits<double>::infinity();
    for (Index node : shell) q = std::max(q, (u[node] - u[center]) / std::pow(r, power));
    v.quotient = q;
    v.pass = q >= c0;
    rep.verdicts.push_back(v);
  }
  return rep;
}

ProblemSpec scale_problem(const ProblemSpec& spec, double kappa, double tau, const Point& x0) {
  if (!(kappa > 0) || !(tau > 0)) throw ValidationError("scale_problem: kappa and tau must be positive");
  const int n = spec.dim();
  if (x0.size() != n) throw ValidationError("scale_problem: x0 has the wrong dimension");
  const DomainSpec& dom = spec.domain;
  for (int i = 0; i < n; ++i) {
    if (x0[i] - tau < dom.lower[i] - 1e-12 || x0[i] + tau > dom.upper[i] + 1e-12) {
      throw GeometryError("scale_problem: image of the unit box leaves the domain");
    }
  }
  const double ratio = tau / kappa;
  auto map = [x0, tau](const Point& x) -> Point { return x0 + tau * x; };

  ProblemSpec out = spec;
  out.domain = make_box((dom.lower - x0) / tau, (dom.upper - x0) / tau);
  if (dom.boundary_graph) {
    const ScalarField phi = *dom.boundary_graph;
    const Point head = x0.head(n - 1);
    const double xn = x0[n - 1];
    out.domain.boundary_graph = [phi, head, xn, tau](const Point& y) { return (phi(head + tau * y) - xn) / tau; };
  }

  const ExponentFields& ex = spec.law.exponents;
  const ScalarField p = ex.p, q = ex.q, a = ex.a;
  ScalarField ps = [p, map](const Point& x) { return p(map(x)); };
  ScalarField qs = [q, map](const Point& x) { return q(map(x)); };
  ScalarField as = [p, q, a, map, ratio](const Point& x) {
    const Point X = map(x);
    return std::pow(ratio, p(X) - q(X)) * a(X);
  };
  out.law.exponents = make_exponents(ps, qs, as, out.domain);
  out.law.eps_gradient_scale = spec.law.eps_gradient_scale * ratio;
  out.properness_scale = spec.properness_scale * tau * tau;

  if (spec.source) {
    const ScalarField f = spec.source;
    out.source = [f, p, map, tau, kappa](const Point& x) {
      const Point X = map(x);
      const double px = p(X);
      return std::pow(tau, px + 2) / std::pow(kappa, px + 1) * f(X);
    };
  }
  if (spec.boundary) {
    const ScalarField g = spec.boundary;
    out.boundary = [g, map, kappa](const Point& x) { return g(map(x)) / kappa; };
  }
  if (spec.shift.size() == n) out.shift = ratio * spec.shift;
  if (spec.op.coefficients) {
    const MatrixField A = *spec.op.coefficients;
    out.op.coefficients = [A, map](const Point& x) { return A(map(x)); };
  }
  if (const auto* dc = std::get_if<DeadCoreVariant>(&spec.variant)) {
    const ScalarField f0 = dc->f0;
    const double sigma = dc->sigma;
    out.variant = DeadCoreVariant{sigma, [f0, p, map, tau, kappa, sigma](const Point& x) {
                                    const Point X = map(x);
                                    const double px = p(X);
                                    return std::pow(tau, px + 2) * std::pow(kappa, sigma - px - 1) * f0(X);
                                  }};
  } else if (const auto* ob = std::get_if<ObstacleVariant>(&spec.variant)) {
    const ScalarField phi = ob->obstacle;
    out.variant = ObstacleVariant{[phi, map, kappa](const Point& x) { return phi(map(x)) / kappa; }};
  }
  return out;
}

EquivarianceReport scale_equivariance_test(const ProblemSpec& spec, double kappa, double tau, const Point& x0,
                                           const SolveOptions& opts) {
  if (tau != 1.0 && tau != 0.5 && tau != 0.25) throw ValidationError("scale_equivariance_test: tau must be 1, 1/2 or 1/4");
  if (spec.domain.boundary_graph) throw ConfigurationError("scale_equivariance_test: box domains only");
  if (effective_stencil_radius(spec, opts) != 1) {
    throw ConfigurationError("scale_equivariance_test: needs a radius-1 scheme (axis stencil)");
  }
  const GridPtr grid = build_problem_grid(spec, opts);
  if (!grid->is_node(x0)) throw ValidationError("scale_equivariance_test: x0 must be a grid node");

  EquivarianceReport rep;
  const SolveResult original = solve_any(spec, grid, opts);
  rep.original = original.report;

  ProblemSpec scaled = scale_problem(spec, kappa, tau, x0);
  const int n = spec.dim();
  scaled.domain = make_box(n, -1, 1);
  const ExponentFields& ex = scaled.law.exponents;
  scaled.law.exponents = make_exponents(ex.p, ex.q, ex.a, scaled.domain);
  const GridFunction u = original.u;
  scaled.boundary = [u, x0, tau, kappa](const Point& x) {
    return u[u.grid->nearest_node(Point(x0 + tau * x))] / kappa;
  };

  SolveOptions sopts = opts;
  sopts.h = opts.h / tau;
  const GridPtr sgrid = build_problem_grid(scaled, sopts);
  const SolveResult v = solve_any(scaled, sgrid, sopts);
  rep.scaled = v.report;
  for (Index node = 0; node < sgrid->size(); ++node) {
    if (sgrid->kind(node) == NodeKind::Exterior) continue;
    const Point X = x0 + tau * sgrid->point(node);
    if (!grid->is_node(X)) throw ConfigurationError("scale_equivariance_test: grids are not node-aligned");
    rep.max_mismatch = std::max(rep.max_mismatch, std::abs(v.u[node] - u[grid->nearest_node(X)] / kappa));
    ++rep.compared;
  }
  return rep;
}

GrowthReport boundary_growth_check(const GridFunction& u, const ProblemSpec& spec, double delta, double gamma) {
  if (!(delta > 0)) throw ValidationError("boundary_growth_check: delta must be positive");
  const Grid& grid = *u.grid;
  const DomainSpec& dom = spec.domain;
  const int n = dom.dim();
  const double tol = 10 * grid.h();
  GrowthReport rep;
  for (Index node = 0; node < grid.size(); ++node) {
    if (grid.kind(node) == NodeKind::Exterior) continue;
    const Point x = grid.point(node);
    if (dom.height_above_graph(x) < -1e-12) continue;
    const double d = boundary_distance(dom, x);
    if (d >= delta) continue;
    Point foot = x;
    if (dom.boundary_graph) {
      foot[n - 1] = (*dom.boundary_graph)(Point(x.head(n - 1)));
    } else {
      int axis = 0;
      double best = std::numeric_limits<double>::infinity(), value = 0;
      for (int i = 0; i < n; ++i) {
        if (x[i] - dom.lower[i] < best) best = x[i] - dom.lower[i], axis = i, value = dom.lower[i];
        if (dom.upper[i] - x[i] < best) best = dom.upper[i] - x[i], axis = i, value = dom.upper[i];
      }
      foot[axis] = value;
    }
    GrowthVerdict v;
    v.node = node;
    v.distance = d;
    v.deviation = std::abs(u[node] - spec.boundary(foot));
    v.envelope = (2 / delta) * d / (1 + std::pow(d, gamma));
    v.pass = v.deviation <= v.envelope + tol;
    rep.pass = rep.pass && v.pass;
    rep.worst_excess = std::max(rep.worst_excess, v.deviation - v.envelope);
    rep.verdicts.push_back(v);
  }
  return rep;
}

LipschitzEstimate lipschitz_quotient(const GridFunction& u, const std::vector<Index>& region, std::uint64_t seed) {
  const Grid& grid = *u.grid;
  LipschitzEstimate est;
  est.seed = seed;
  if (region.empty()) throw EmptySetError("lipschitz_quotient: empty region");
  if (region.size() == 1) {
    est.warnings.push_back("single-node region; quotient set to 0");
    return est;
  }
  std::vector<char> member(grid.size(), 0);
  for (Index node : region) member[node] = 1;
  auto quotient = [&](Index i, Index j) {
    const double d = (grid.point(i) - grid.point(j)).norm();
    if (d > 0) est.value = std::max(est.value, std::abs(u[i] - u[j]) / d);
    ++est.pairs;
  };
  const int n = grid.dim();
  const double reach = 4 * grid.h() * (1 + 1e-12);
  for (Index i : region) {
    Eigen::VectorXi off = Eigen::VectorXi::Constant(n, -4);
    while (true) {
      const Index j = grid.neighbor(i, off);
      if (j > i && member[j] && off.cast<double>().norm() * grid.h() <= reach) quotient(i, j);
      int k = 0;
      while (k < n && ++off[k] > 4) off[k++] = -4;
      if (k == n) break;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, region.size() - 1);
  for (int s = 0; s < 1000; ++s) {
    const Index i = region[pick(rng)], j = region[pick(rng)];
    if (i != j) quotient(i, j);
  }
  return est;
}

std::pair<double, double> radial_constants(double p, int n, std::optional<double> sigma) {
  if (!(p > 0)) throw ValidationError("exact_radial_solution: p must be positive");
  if (n < 1) throw ValidationError("exact_radial_solution: dimension must be positive");
  const double s = sigma.value_or(0.0);
  if (sigma && !(s >= 0 && s < p + 1)) throw ValidationError("exact_radial_solution: sigma out of range");
  const double beta = sigma ? (p + 2) / (p + 1 - s) : 1 + 1 / (p + 1);
  if (!(beta + n - 2 > 0)) throw ValidationError("exact_radial_solution: beta + n - 2 must be positive");
  const double c = std::pow(std::pow(beta, p + 1) * (beta + n - 2), -1 / (p + 1 - s));
  return {c, beta};
}

RadialSolution exact_radial_solution(double p, int n, std::optional<double> sigma, const GridPtr& grid,
                                     const Point& x_center) {
  if (grid->dim() != n || x_center.size() != n) throw ValidationError("exact_radial_solution: dimension mismatch");
  const auto [c, beta] = radial_constants(p, n, sigma);
  RadialSolution out{GridFunction(grid), c, beta};
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) != NodeKind::Exterior) out.u[node] = c * std::pow((grid->point(node) - x_center).norm(), beta);
  }
  return out;
}

}  // namespace degenlab
