#pragma once

// Continuous problem data for H(x, Du) F(D^2 u) = f with the non-homogeneous
// degeneracy law |xi|^p(x) + a(x) |xi|^q(x), and its structural checks.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace degenlab {

using Point = Eigen::VectorXd;
using ScalarField = std::function<double(const Point&)>;
/// Returns an n x n matrix; only diagonal matrices are supported by the discretization.
using MatrixField = std::function<Eigen::MatrixXd(const Point&)>;

ScalarField constant_field(double value);

struct EllipticityPair {
  double lambda = 1.0;
  double Lambda = 1.0;
};

/// Axis-aligned box, optionally cut by the graph {y_n > phi(y')}.
struct DomainSpec {
  Point lower;
  Point upper;
  /// phi evaluated on the first n-1 coordinates (passed as a vector of size n-1).
  std::optional<ScalarField> boundary_graph;

  int dim() const { return static_cast<int>(lower.size()); }
  double diameter() const { return (upper - lower).norm(); }
  bool contains(const Point& x, double tol = 1e-12) const;
  /// Signed vertical offset y_n - phi(y'); +inf without a graph.
  double height_above_graph(const Point& x) const;
};

DomainSpec make_box(const Point& lower, const Point& upper);
DomainSpec make_box(int dim, double lo, double hi);

struct FieldBounds {
  double p_min = 0, p_max = 0;
  double q_min = 0, q_max = 0;
  double a_min = 0, a_max = 0;
};

/// p(.), q(.), a(.) with bounds cached from a sampling of the closed domain.
struct ExponentFields {
  ScalarField p;
  ScalarField q;
  ScalarField a;
  DomainSpec domain;
  FieldBounds bounds;
};

/// Default sampling lattice resolution (points per axis) for cached bounds.
inline constexpr int kBoundsResolution = 33;

/// Lattice of points of the closed domain used for validation and bounds.
std::vector<Point> sample_points(const DomainSpec& domain, int per_axis = kBoundsResolution);
/// Lattice points on the boundary (box faces inside the graph region, plus graph feet).
std::vector<Point> boundary_sample_points(const DomainSpec& domain, int per_axis = kBoundsResolution);

ExponentFields make_exponents(ScalarField p, ScalarField q, ScalarField a, const DomainSpec& domain,
                              int per_axis = kBoundsResolution);

struct DegeneracyLaw {
  ExponentFields exponents;
  double L1 = 1.0;
  double L2 = 1.0;
  /// Multiplies eps inside (eps + |xi|); produced by rescaling, 1 otherwise.
  double eps_gradient_scale = 1.0;
};

enum class OperatorKind { PucciPlus, PucciMinus, LinearTrace };

struct Operator {
  OperatorKind kind = OperatorKind::PucciPlus;
  EllipticityPair ellipticity;
  std::optional<MatrixField> coefficients;  // LinearTrace only
};

struct PlainVariant {};
struct DeadCoreVariant {
  double sigma = 0.0;
  ScalarField f0;
};
struct ObstacleVariant {
  ScalarField obstacle;
};
using ProblemVariant = std::variant<PlainVariant, DeadCoreVariant, ObstacleVariant>;

struct ProblemSpec {
  DomainSpec domain;
  Operator op;
  DegeneracyLaw law;
  ScalarField source;
  ScalarField boundary;
  double beta_g = 1.0;
  Point shift;  // zeta; empty means zero
  ProblemVariant variant = PlainVariant{};
  /// Multiplies eps in the zeroth-order term eps*u; produced by rescaling, 1 otherwise.
  double properness_scale = 1.0;

  int dim() const { return domain.dim(); }
  Point zeta() const { return shift.size() == dim() ? shift : Point::Zero(dim()); }
};

/// Scalar kernel (eps + s)^p + a (eps + s)^q.
template <typename Scalar>
Scalar degeneracy_kernel(Scalar p, Scalar q, Scalar a, Scalar s, Scalar eps) {
  using std::pow;
  const Scalar base = eps + s;
  return pow(base, p) + a * pow(base, q);
}

/// K^eps_{p,q,a}(x, s); eps = 0 gives the unregularized law.
double degeneracy_eval(const DegeneracyLaw& law, const Point& x, double s, double eps);

struct LipschitzModuli {
  double grad_p = 0;
  double grad_q = 0;
  double grad_a = 0;
};

/// A1 + A2 upper bound for |H_eps(x, xi) - H_eps(y, xi)| at |xi| = s, 0 < s <= 1.
double continuity_bound(const DegeneracyLaw& law, const Point& x, const Point& y, double s, double eps,
                        const LipschitzModuli& moduli);

/// Empty iff the problem satisfies the structural assumptions; each entry names the broken one.
std::vector<std::string> validate_problem(const ProblemSpec& spec);

struct ExponentSample {
  Point x;
  double p;
  double q;
};

struct LogHolderResult {
  double max_statistic = 0;
  bool pass = true;
  std::vector<double> per_scale;  // max statistic over pairs at distance <= scale
  std::vector<std::string> warnings;
};

/// max over sample pairs of (|dp| + |dq|) ln(1/|x - y|), pairs restricted to distances <= max(scales).
LogHolderResult log_holder_check(const std::vector<ExponentSample>& samples,
                                 const std::vector<double>& scales, double threshold);

}  // namespace degenlab
