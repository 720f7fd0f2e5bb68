#include "degenlab/model.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "degenlab/error.hpp"

namespace degenlab {

ScalarField constant_field(double value) {
  return [value](const Point&) { return value; };
}

bool DomainSpec::contains(const Point& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return height_above_graph(x) >= -tol;
}

double DomainSpec::height_above_graph(const Point& x) const {
  if (!boundary_graph) return std::numeric_limits<double>::infinity();
  const int n = dim();
  const Point head = x.head(n - 1);
  return x[n - 1] - (*boundary_graph)(head);
}

DomainSpec make_box(const Point& lower, const Point& upper) {
  DomainSpec d;
  d.lower = lower;
  d.upper = upper;
  return d;
}

DomainSpec make_box(int dim, double lo, double hi) {
  return make_box(Point::Constant(dim, lo), Point::Constant(dim, hi));
}

namespace {

// Visits every point of a per_axis^n lattice of the box.
template <typename Visit>
void for_each_lattice_point(const DomainSpec& domain, int per_axis, Visit&& visit) {
  const int n = domain.dim();
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
  const Point step = (domain.upper - domain.lower) / std::max(per_axis - 1, 1);
  while (true) {
    Point x = domain.lower + (idx.cast<double>().array() * step.array()).matrix();
    bool on_face = false;
    for (int i = 0; i < n; ++i) on_face = on_face || idx[i] == 0 || idx[i] == per_axis - 1;
    visit(x, on_face);
    int k = 0;
    while (k < n && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == n) break;
  }
}

}  // namespace

std::vector<Point> sample_points(const DomainSpec& domain, int per_axis) {
  std::vector<Point> points;
  for_each_lattice_point(domain, per_axis, [&](const Point& x, bool) {
    if (domain.height_above_graph(x) >= -1e-12) points.push_back(x);
  });
  return points;
}

std::vector<Point> boundary_sample_points(const DomainSpec& domain, int per_axis) {
  std::vector<Point> points;
  const int n = domain.dim();
  for_each_lattice_point(domain, per_axis, [&](const Point& x, bool on_face) {
    const double height = domain.height_above_graph(x);
    if (on_face && height >= -1e-12) points.push_back(x);
    if (domain.boundary_graph && x[n - 1] == domain.lower[n - 1]) {
      Point foot = x;
      foot[n - 1] = (*domain.boundary_graph)(Point(x.head(n - 1)));
      if (foot[n - 1] >= domain.lower[n - 1] && foot[n - 1] <= domain.upper[n - 1]) points.push_back(foot);
    }
  });
  return points;
}

namespace {

FieldBounds compute_bounds(const ScalarField& p, const ScalarField& q, const ScalarField& a,
                           const std::vector<Point>& points) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  FieldBounds b{inf, -inf, inf, -inf, inf, -inf};
  for (const auto& x : points) {
    const double pv = p(x), qv = q(x), av = a(x);
    b.p_min = std::min(b.p_min, pv);
    b.p_max = std::max(b.p_max, pv);
    b.q_min = std::min(b.q_min, qv);
    b.q_max = std::max(b.q_max, qv);
    b.a_min = std::min(b.a_min, av);
    b.a_max = std::max(b.a_max, av);
  }
  return b;
}

}  // namespace

ExponentFields make_exponents(ScalarField p, ScalarField q, ScalarField a, const DomainSpec& domain,
                              int per_axis) {
  ExponentFields e{std::move(p), std::move(q), std::move(a), domain, {}};
  e.bounds = compute_bounds(e.p, e.q, e.a, sample_points(domain, per_axis));
  return e;
}

double degeneracy_eval(const DegeneracyLaw& law, const Point& x, double s, double eps) {
  const auto& e = law.exponents;
  if (!e.domain.contains(x, 1e-9)) throw DomainError("degeneracy_eval: point outside the domain");
  if (s < 0 || eps < 0) throw ValidationError("degeneracy_eval: s and eps must be nonnegative");
  return degeneracy_kernel(e.p(x), e.q(x), e.a(x), s, eps * law.eps_gradient_scale);
}

double continuity_bound(const DegeneracyLaw& law, const Point& x, const Point& y, double s, double eps,
                        const LipschitzModuli& moduli) {
  if (!(s > 0) || s > 1) throw OutOfRangeError("continuity_bound: requires 0 < s <= 1");
  if (!(eps > 0) || eps >= 1) throw OutOfRangeError("continuity_bound: requires 0 < eps < 1");
  const auto& b = law.exponents.bounds;
  const double base = eps + s;
  const double log_term = std::abs(std::log(base));
  const double dist = (x - y).norm();
  const double a1 = moduli.grad_p * std::pow(base, b.p_min) * log_term * dist;
  const double a2 = (moduli.grad_q * b.a_max * log_term + moduli.grad_a) * std::pow(base, b.q_min) * dist;
  return a1 + a2;
}

namespace {

bool all_finite(const ScalarField& f, const std::vector<Point>& points) {
  return std::all_of(points.begin(), points.end(), [&](const Point& x) { return std::isfinite(f(x)); });
}

}  // namespace

std::vector<std::string> validate_problem(const ProblemSpec& spec) {
  std::vector<std::string> out;
  const DomainSpec& domain = spec.domain;
  const int n = domain.dim();

  if (n < 1 || n > 3 || domain.upper.size() != n) {
    out.push_back("A0': domain must be a box of dimension 1, 2 or 3");
    return out;
  }
  for (int i = 0; i < n; ++i) {
    if (!(domain.upper[i] > domain.lower[i]) || !std::isfinite(domain.upper[i] - domain.lower[i])) {
      out.push_back("A0': box must be bounded and nondegenerate");
      return out;
    }
  }
  if (domain.boundary_graph) {
    if (n < 2) {
      out.push_back("Condphi: a boundary graph needs dimension >= 2");
    } else {
      const auto& phi = *domain.boundary_graph;
      const Point origin = Point::Zero(n - 1);
      double slope = 0;
      constexpr double step = 1e-6;
      for (int i = 0; i < n - 1; ++i) {
        Point e = Point::Zero(n - 1);
        e[i] = step;
        slope = std::max(slope, std::abs((phi(origin + e) - phi(origin - e)) / (2 * step)));
      }
      if (std::abs(phi(origin)) > 1e-10 || slope > 1e-10) out.push_back("Condphi: phi(0) and Dphi(0) must vanish");
    }
  }

  const auto& ell = spec.op.ellipticity;
  if (!(ell.lambda > 0) || !(ell.lambda <= ell.Lambda) || !std::isfinite(ell.Lambda)) {
    out.push_back("A1: ellipticity requires 0 < lambda <= Lambda < inf");
  }

  const auto points = sample_points(domain);
  const auto boundary_points = boundary_sample_points(domain);

  try {
    const auto& ex = spec.law.exponents;
    if (!ex.p || !ex.q || !ex.a) {
      out.push_back("A5: exponent fields p, q, a must be provided");
    } else {
      const FieldBounds b = compute_bounds(ex.p, ex.q, ex.a, points);
      if (!(b.p_min > 0)) out.push_back("A5: p_min must be > 0");
      if (!(b.p_max <= b.q_min)) out.push_back("A5: p_max must not exceed q(x)");
      if (!std::isfinite(b.q_max) || !std::isfinite(b.p_max)) out.push_back("A5: q_max must be finite");
      if (!(b.a_min >= 0)) out.push_back("A5: a(x) must be >= 0");
      if (!std::isfinite(b.a_max)) out.push_back("A5: a(x) must be bounded");
    }
  } catch (const std::exception& e) {
    out.push_back(std::string("A5: exponent evaluation failed: ") + e.what());
  }

  if (!(spec.law.L1 > 0) || !(spec.law.L1 <= spec.law.L2) || !std::isfinite(spec.law.L2)) {
    out.push_back("A4: sandwich constants require 0 < L1 <= L2 < inf");
  }
  if (!(spec.law.eps_gradient_scale > 0) || !(spec.properness_scale > 0)) {
    out.push_back("appro_problem: eps scale factors must be positive");
  }

  if (spec.op.kind == OperatorKind::LinearTrace) {
    if (!spec.op.coefficients) {
      out.push_back("ModelEq: linear-trace operator needs a coefficient field");
    } else {
      bool diagonal = true, bounded = true;
      for (const auto& x : points) {
        const Eigen::MatrixXd A = (*spec.op.coefficients)(x);
        if (A.rows() != n || A.cols() != n) {
          diagonal = false;
          break;
        }
        const Eigen::MatrixXd off = A - Eigen::MatrixXd(A.diagonal().asDiagonal());
        if (off.cwiseAbs().maxCoeff() > 0) diagonal = false;
        for (int i = 0; i < n; ++i) {
          if (A(i, i) < ell.lambda - 1e-14 || A(i, i) > ell.Lambda + 1e-14) bounded = false;
        }
      }
      if (!diagonal) out.push_back("ModelEq: only diagonal coefficient matrices are supported");
      if (!bounded) out.push_back("ModelEq: coefficient entries must lie in [lambda, Lambda]");
    }
  }

  try {
    if (!spec.source || !all_finite(spec.source, points)) out.push_back("A3: source f must be finite");
    if (!spec.boundary || !all_finite(spec.boundary, boundary_points)) out.push_back("A3: boundary data g must be finite");
  } catch (const std::exception& e) {
    out.push_back(std::string("A3: data evaluation failed: ") + e.what());
  }
  if (!(spec.beta_g > 0) || spec.beta_g > 1) out.push_back("A3: beta_g must lie in (0, 1]");
  if (spec.shift.size() != 0 && spec.shift.size() != n) out.push_back("T3.1: shift must have the domain dimension");

  if (const auto* dc = std::get_if<DeadCoreVariant>(&spec.variant)) {
    const auto& ex = spec.law.exponents;
    const double p_max = ex.p ? compute_bounds(ex.p, ex.q, ex.a, points).p_max : 0.0;
    if (!(dc->sigma >= 0) || !(dc->sigma < p_max + 1)) out.push_back("Maineq: ς out of range");
    if (!dc->f0 || std::any_of(points.begin(), points.end(), [&](const Point& x) { return !(dc->f0(x) >= 0); })) {
      out.push_back("Maineq: f0 must be >= 0");
    }
    if (spec.boundary && std::any_of(boundary_points.begin(), boundary_points.end(),
                                     [&](const Point& x) { return spec.boundary(x) < 0; })) {
      out.push_back("Maineq: boundary data must be >= 0");
    }
  } else if (const auto* ob = std::get_if<ObstacleVariant>(&spec.variant)) {
    if (!ob->obstacle) {
      out.push_back("Eq1: obstacle field missing");
    } else if (spec.boundary && std::any_of(boundary_points.begin(), boundary_points.end(), [&](const Point& x) {
                 return ob->obstacle(x) > spec.boundary(x) + 1e-12;
               })) {
      out.push_back("Eq1: obstacle exceeds boundary data");
    }
  }
  return out;
}

LogHolderResult log_holder_check(const std::vector<ExponentSample>& samples, const std::vector<double>& scales,
                                 double threshold) {
  if (samples.size() < 2) throw ValidationError("log_holder_check: at least two samples required");
  if (scales.empty()) throw ValidationError("log_holder_check: at least one scale required");
  for (double s : scales) {
    if (!(s > 0) || !(s < 1)) throw ValidationError("log_holder_check: scales must lie in (0, 1)");
  }
  LogHolderResult res;
  res.per_scale.assign(scales.size(), 0.0);
  std::size_t coincident = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = (samples[i].x - samples[j].x).norm();
      if (d == 0) {
        ++coincident;
        continue;
      }
      const double stat =
          (std::abs(samples[i].p - samples[j].p) + std::abs(samples[i].q - samples[j].q)) * std::log(1.0 / d);
      for (std::size_t k = 0; k < scales.size(); ++k) {
        if (d <= scales[k]) res.per_scale[k] = std::max(res.per_scale[k], stat);
      }
    }
  }
  if (coincident > 0) {
    std::ostringstream msg;
    msg << "skipped " << coincident << " coincident sample pair(s)";
    res.warnings.push_back(msg.str());
  }
  res.max_statistic = *std::max_element(res.per_scale.begin(), res.per_scale.end());
  res.pass = res.max_statistic <= threshold;
  return res;
}

}  // namespace degenlab
