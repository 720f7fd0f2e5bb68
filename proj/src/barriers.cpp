#include "degenlab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "degenlab/error.hpp"
#include "degenlab/pucci.hpp"

namespace degenlab {

namespace {

constexpr double kSupMargin = 1e-6;
constexpr double kAlphaMargin = 1e-3;

}  // namespace

const char* to_string(BarrierKind kind) {
  switch (kind) {
    case BarrierKind::GlobalSuper: return "global_super";
    case BarrierKind::ExteriorSphere: return "exterior_sphere";
    case BarrierKind::DistanceBarrier: return "distance_barrier";
  }
  return "unknown";
}

BarrierKind barrier_kind_from_string(const std::string& name) {
  if (name == "global_super") return BarrierKind::GlobalSuper;
  if (name == "exterior_sphere") return BarrierKind::ExteriorSphere;
  if (name == "distance_barrier") return BarrierKind::DistanceBarrier;
  throw ValidationError("unknown barrier kind: " + name);
}

double BarrierParams::at(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ValidationError("barrier parameter missing: " + key);
  return it->second;
}

double distance_barrier_margin(double delta, double gamma, double r, double K_geom, const EllipticityPair& ell,
                               int n, double f_sup, double L1, double p_min, double q_max) {
  const double dg = std::pow(delta, gamma);
  const double lhs = 2 * gamma * ell.lambda * (1 + gamma) * dg / (delta * delta * std::pow(1 + dg, 3));
  const double inv = 1 / (4 * delta);
  const double grad_floor = std::min(std::pow(inv, q_max), std::pow(inv, p_min));
  const double rhs = 2 * n * K_geom * ell.Lambda / delta + 6 * n * ell.Lambda / ((1 - r) * (1 - r)) +
                     f_sup / (L1 * grad_floor);
  return lhs - rhs;
}

namespace {

BarrierInequality distance_inequality(const std::string& name, const BarrierParams& p, double delta) {
  const EllipticityPair ell{p.at("lambda"), p.at("Lambda")};
  const double margin = distance_barrier_margin(delta, p.at("gamma"), p.at("r"), p.at("K_geom"), ell,
                                                static_cast<int>(p.at("n")), p.at("f_sup"), p.at("L1"),
                                                p.at("p_min"), p.at("q_max"));
  return {name, margin, 0.0, true};
}

}  // namespace

std::vector<BarrierInequality> reverify(const BarrierParams& p) {
  std::vector<BarrierInequality> out;
  switch (p.kind) {
    case BarrierKind::GlobalSuper: {
      const double n = p.at("n"), lambda = p.at("lambda");
      out.push_back({"M_star >= c0", p.at("M_star"), p.at("c0"), false});
      out.push_back({"M_star >= lambda n", p.at("M_star"), lambda * n, false});
      const double boundary_min = p.at("M_bar") - p.at("M_star") / (2 * lambda * n) * p.at("max_dist2");
      out.push_back({"v1 > sup|g| on Dirichlet nodes", boundary_min, p.at("g_sup"), true});
      break;
    }
    case BarrierKind::ExteriorSphere: {
      const double a0 = p.at("alpha0"), R = p.at("R");
      out.push_back({"lambda (alpha0 + 2) - n Lambda >= 1", p.at("lambda") * (a0 + 2) - p.at("n") * p.at("Lambda"),
                     1.0, false});
      out.push_back({"alpha0 > 2", a0, 2.0, true});
      const double K_min = std::pow(R, 1 + a0) * std::max(1.0, p.at("c0") + p.at("g_sup")) / a0;
      out.push_back({"K >= R^(1+alpha0) max{1, c0 + sup|g|} / alpha0", p.at("K"), K_min, false});
      break;
    }
    case BarrierKind::DistanceBarrier: {
      const double d0 = p.at("delta0");
      out.push_back({"delta0 > 0", d0, 0.0, true});
      out.push_back({"delta0 <= cap", p.at("cap"), d0, false});
      out.push_back(distance_inequality("barrier inequality at delta0", p, d0));
      out.push_back(distance_inequality("barrier inequality at delta0/2", p, d0 / 2));
      break;
    }
  }
  return out;
}

bool all_hold(const std::vector<BarrierInequality>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const BarrierInequality& c) { return c.holds(); });
}

double source_sup(const ProblemSpec& spec, const Grid& grid) {
  double m = 0;
  for (Index node = 0; node < grid.size(); ++node) {
    if (grid.kind(node) != NodeKind::Exterior) m = std::max(m, std::abs(spec.source(grid.point(node))));
  }
  return m;
}

double boundary_sup(const ProblemSpec& spec, const Grid& grid) {
  double m = 0;
  for (Index node : grid.dirichlet()) m = std::max(m, std::abs(spec.boundary(grid.trace(node))));
  return m;
}

BarrierResult global_supersolution(const ProblemSpec& spec, const GridPtr& grid, const Point& x0) {
  const DomainSpec& domain = spec.domain;
  if (x0.size() != domain.dim() || !domain.contains(x0)) {
    throw ConfigurationError("global_supersolution: x0 must lie in the domain");
  }
  const int n = domain.dim();
  const double lambda = spec.op.ellipticity.lambda;
  const double f_sup = source_sup(spec, *grid), g_sup = boundary_sup(spec, *grid);
  const double c0 = f_sup / spec.law.L1;
  const double M_star = std::max(c0, lambda * n);
  double max_dist2 = 0;
  for (Index node : grid->dirichlet()) max_dist2 = std::max(max_dist2, (grid->point(node) - x0).squaredNorm());
  const double k = M_star / (2 * lambda * n);
  const double M_bar = g_sup + k * max_dist2 + kSupMargin;

  BarrierResult out{GridFunction(grid), {}};
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) != NodeKind::Exterior) out.v[node] = M_bar - k * (grid->point(node) - x0).squaredNorm();
  }
  auto& P = out.params;
  P.kind = BarrierKind::GlobalSuper;
  P.values = {{"M_bar", M_bar}, {"M_star", M_star}, {"c0", c0}, {"lambda", lambda}, {"n", double(n)},
              {"g_sup", g_sup}, {"f_sup", f_sup}, {"L1", spec.law.L1}, {"max_dist2", max_dist2},
              {"margin", kSupMargin}};
  for (int i = 0; i < n; ++i) P.values["x0_" + std::to_string(i)] = x0[i];
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) dist = std::min({dist, x0[i] - domain.lower[i], domain.upper[i] - x0[i]});
  if (dist < 1) P.notes.push_back("x0 is closer than 1 to the boundary; the construction assumes a rescaled domain");
  P.provenance = reverify(P);
  return out;
}

BarrierResult exterior_sphere_barrier(const ProblemSpec& spec, const GridPtr& grid, const Point& z, const Point& x_z,
                                      double r) {
  const int n = spec.dim();
  if (z.size() != n || x_z.size() != n || !(r > 0)) throw ValidationError("exterior_sphere_barrier: bad arguments");
  if (std::abs((z - x_z).norm() - r) > 1e-10) throw GeometryError("exterior_sphere_barrier: |z - x_z| must equal r");
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) == NodeKind::Exterior) continue;
    const Point x = grid->point(node);
    const double d = (x - x_z).norm();
    if (d < r - 1e-12 || (d <= r + 1e-12 && (x - z).norm() > 1e-9)) {
      throw GeometryError("exterior_sphere_barrier: the closed ball meets the domain away from z");
    }
  }
  const EllipticityPair& ell = spec.op.ellipticity;
  const double alpha0 = std::max(2.0, (1 + n * ell.Lambda) / ell.lambda - 2) + kAlphaMargin;
  const double R = r + spec.domain.diameter();
  const double f_sup = source_sup(spec, *grid), g_sup = boundary_sup(spec, *grid);
  const double c0 = f_sup / spec.law.L1;
  const double K = std::pow(R, 1 + alpha0) * std::max(1.0, c0 + g_sup) / alpha0;

  BarrierResult out{GridFunction(grid), {}};
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) == NodeKind::Exterior) continue;
    out.v[node] = K * (std::pow(r, -alpha0) - std::pow((grid->point(node) - x_z).norm(), -alpha0));
  }
  auto& P = out.params;
  P.kind = BarrierKind::ExteriorSphere;
  P.values = {{"alpha0", alpha0}, {"K", K}, {"R", R}, {"r", r}, {"c0", c0}, {"g_sup", g_sup},
              {"f_sup", f_sup}, {"lambda", ell.lambda}, {"Lambda", ell.Lambda}, {"n", double(n)},
              {"mu", kAlphaMargin}};
  P.provenance = reverify(P);
  return out;
}

DistanceDelta distance_barrier_delta(const ProblemSpec& spec, double gamma, double r, double K_geom,
                                     std::optional<double> eta) {
  if (!(gamma > 0 && gamma < 1)) throw ValidationError("distance_barrier_delta: gamma must lie in (0, 1)");
  if (!(r > 0 && r < 1)) throw ValidationError("distance_barrier_delta: r must lie in (0, 1)");
  if (!(K_geom >= 0)) throw ValidationError("distance_barrier_delta: K_geom must be nonnegative");
  const double eta_v = eta ? *eta : (K_geom > 0 ? 1 / (2 * K_geom) : std::numeric_limits<double>::infinity());
  if (!(eta_v > 0)) throw ValidationError("distance_barrier_delta: eta must be positive");

  const int n = spec.dim();
  const auto& b = spec.law.exponents.bounds;
  double f_sup = 0;
  for (const auto& x : sample_points(spec.domain)) f_sup = std::max(f_sup, std::abs(spec.source(x)));
  const EllipticityPair& ell = spec.op.ellipticity;
  auto margin = [&](double d) {
    return distance_barrier_margin(d, gamma, r, K_geom, ell, n, f_sup, spec.law.L1, b.p_min, b.q_max);
  };

  DistanceDelta out;
  out.cap = std::min(eta_v, (1 - r) / 12);
  if (margin(out.cap) > 0) {
    out.delta0 = out.cap;
    out.cap_limited = true;
  } else {
    double hi = out.cap, lo = out.cap / 2;
    while (!(margin(lo) > 0)) {
      hi = lo;
      lo /= 2;
      if (lo < 1e-14) throw InfeasibilityError("distance_barrier_delta: no admissible delta");
    }
    while (hi - lo > 1e-8) {
      const double mid = 0.5 * (lo + hi);
      (margin(mid) > 0 ? lo : hi) = mid;
    }
    out.delta0 = lo;
    out.bracket = hi - lo;
  }
  out.margin_at_half = margin(out.delta0 / 2);
  if (!(out.margin_at_half > 0)) throw InfeasibilityError("distance_barrier_delta: inequality fails at delta0/2");

  auto& P = out.params;
  P.kind = BarrierKind::DistanceBarrier;
  P.values = {{"delta0", out.delta0}, {"gamma", gamma}, {"r", r}, {"K_geom", K_geom}, {"eta", eta_v},
              {"cap", out.cap}, {"bracket", out.bracket}, {"lambda", ell.lambda}, {"Lambda", ell.Lambda},
              {"n", double(n)}, {"f_sup", f_sup}, {"L1", spec.law.L1}, {"p_min", b.p_min}, {"q_max", b.q_max}};
  if (out.cap_limited) P.notes.push_back("inequality holds on the whole admissible range; delta0 is the cap");
  P.provenance = reverify(P);
  return out;
}

double boundary_distance(const DomainSpec& domain, const Point& x) {
  const int n = domain.dim();
  if (domain.boundary_graph) {
    const auto& phi = *domain.boundary_graph;
    const Point y = x.head(n - 1);
    double slope2 = 0;
    constexpr double step = 1e-6;
    for (int i = 0; i < n - 1; ++i) {
      Point e = Point::Zero(n - 1);
      e[i] = step;
      const double s = (phi(y + e) - phi(y - e)) / (2 * step);
      slope2 += s * s;
    }
    return std::max(0.0, domain.height_above_graph(x)) / std::sqrt(1 + slope2);
  }
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) d = std::min({d, x[i] - domain.lower[i], domain.upper[i] - x[i]});
  return std::max(0.0, d);
}

double graph_curvature_bound(const DomainSpec& domain, const Grid& grid) {
  if (!domain.boundary_graph) return 0.0;
  const int n = domain.dim();
  const auto& phi = *domain.boundary_graph;
  const double h = grid.h();
  double worst = 0;
  for (Index node = 0; node < grid.size(); ++node) {
    const IndexVec idx = grid.multi_index(node);
    if (idx[n - 1] != 0) continue;
    const Point y = grid.point(node).head(n - 1);
    Eigen::MatrixXd hess(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i) {
      for (int j = 0; j < n - 1; ++j) {
        Point ei = Point::Zero(n - 1), ej = Point::Zero(n - 1);
        ei[i] = h;
        ej[j] = h;
        hess(i, j) = (phi(y + ei + ej) - phi(y + ei - ej) - phi(y - ei + ej) + phi(y - ei - ej)) / (4 * h * h);
      }
    }
    worst = std::max(worst, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues().cwiseAbs().maxCoeff());
  }
  return worst;
}

GridFunction distance_barrier(const ProblemSpec& spec, const GridPtr& grid, double delta, double gamma, double r) {
  if (!(delta > 0) || !(gamma >= 0 && gamma < 1) || !(r > 0 && r < 1)) {
    throw ValidationError("distance_barrier: need delta > 0, gamma in [0, 1), r in (0, 1)");
  }
  GridFunction v(grid);
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) == NodeKind::Exterior) continue;
    const Point y = grid->point(node);
    const double d = boundary_distance(spec.domain, y);
    double val = (2 / delta) * d / (1 + std::pow(d, gamma));
    const double ny = y.norm();
    if (ny >= r) val += std::pow(ny - r, 3) / std::pow(1 - r, 3);
    v[node] = val;
  }
  return v;
}

SupersolutionCheck verify_supersolution(const GridFunction& v, const ProblemSpec& spec, BarrierSide side, double tol,
                                        const std::vector<Index>* region) {
  const Grid& grid = *v.grid;
  const StencilBasisSet bases = default_bases(grid.dim(), grid.stencil_radius());
  const double f_sup = source_sup(spec, grid);
  const Point zeta = spec.zeta();
  const auto& ex = spec.law.exponents;
  SupersolutionCheck out;
  const std::vector<Index>& nodes = region ? *region : grid.interior();
  for (Index node : nodes) {
    if (grid.kind(node) != NodeKind::Interior) continue;
    const Point x = grid.point(node);
    const double s = (gradient(v, node) + zeta).norm();
    const double H = degeneracy_kernel(ex.p(x), ex.q(x), ex.a(x), s, 0.0);
    double margin;
    if (side == BarrierSide::Upper) {
      margin = H * pucci_apply(v, node, bases, spec.op.ellipticity, PucciSign::Plus) + f_sup;
    } else {
      margin = f_sup - H * pucci_apply(v, node, bases, spec.op.ellipticity, PucciSign::Minus);
    }
    if (!std::isfinite(margin)) throw NumericFailure("verify_supersolution: non-finite value");
    ++out.checked;
    if (margin > out.worst_margin) {
      out.worst_margin = margin;
      out.location = node;
    }
  }
  out.pass = out.checked == 0 || out.worst_margin <= tol;
  return out;
}

AbpBound abp_bound(const ProblemSpec& spec, const Grid& grid, double C_user) {
  if (!(C_user > 0)) throw ValidationError("abp_bound: C_user must be positive");
  const DomainSpec& domain = spec.domain;
  const int n = domain.dim();
  const double h = grid.h();
  const auto& ex = spec.law.exponents;
  AbpBound out;
  for (Index node : grid.dirichlet()) out.g_plus_sup = std::max(out.g_plus_sup, spec.boundary(grid.trace(node)));
  out.g_plus_sup = std::max(out.g_plus_sup, 0.0);

  double sum = 0;
  IndexVec idx = IndexVec::Zero(n);
  const IndexVec cells = grid.extents().array() - 1;
  while (true) {
    Point c(n);
    for (int i = 0; i < n; ++i) c[i] = domain.lower[i] + (static_cast<double>(idx[i]) + 0.5) * h;
    if (domain.height_above_graph(c) > 0) sum += std::pow(std::abs(spec.source(c) / (1 + ex.a(c))), n);
    int k = 0;
    while (k < n && ++idx[k] >= cells[k]) idx[k++] = 0;
    if (k == n) break;
  }
  out.norm = std::pow(sum * std::pow(h, n), 1.0 / n);
  out.term_pmin = std::pow(out.norm, 1 / (ex.bounds.p_min + 1));
  out.term_qmax = std::pow(out.norm, 1 / (ex.bounds.q_max + 1));
  out.bound = out.g_plus_sup + C_user * domain.diameter() * std::max(out.term_pmin, out.term_qmax);
  return out;
}

double nondegeneracy_root_function(double t, double xi2, double xi3, double m, double p_min, double p_max,
                                   double q_max, bool large) {
  const double k = std::pow((p_min + 2) / (p_min + 1), p_max + 1);
  if (large) return xi2 * std::pow(t, p_max + 1) * (k + xi3 * std::pow(t, q_max - p_max)) - m;
  return xi2 * std::pow(t, p_min + 1) * (k + xi3 * std::pow(t, p_max - p_min)) - m;
}

NondegeneracyConstant nondegeneracy_constant(const ProblemSpec& spec, double m) {
  if (!(m > 0)) throw ValidationError("nondegeneracy_constant: m must be positive");
  const auto& b = spec.law.exponents.bounds;
  const EllipticityPair& ell = spec.op.ellipticity;
  const int n = spec.dim();
  NondegeneracyConstant out;
  out.xi2 = spec.law.L2 * (n * ell.Lambda - b.p_min * ell.lambda / (b.p_min + 1));
  if (!(out.xi2 > 0)) throw InfeasibilityError("nondegeneracy_constant: degenerate Xi2 (n Lambda <= p_min lambda/(p_min+1))");
  out.xi3 = std::max(b.a_max, 0.0) * std::pow((b.p_min + 2) / (b.p_min + 1), b.q_max + 1);

  auto root = [&](bool large) {
    auto g = [&](double t) {
      return nondegeneracy_root_function(t, out.xi2, out.xi3, m, b.p_min, b.p_max, b.q_max, large);
    };
    double lo = 0, hi = 1;
    while (g(hi) <= 0) {
      lo = hi;
      hi *= 2;
      if (hi > 1e300) throw InfeasibilityError("nondegeneracy_constant: no root found");
    }
    for (int it = 0; it < 2000 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0 ? hi : lo) = mid;
    }
    const double t = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
    return std::pair{t, g(t)};
  };

  auto [t, res] = root(false);
  if (t > 1) {
    std::tie(t, res) = root(true);
    out.branch = "large";
  }
  out.T0 = t;
  out.residual = res;
  out.c_frak = t / 2;
  return out;
}

}  // namespace degenlab
