#pragma once

// Explicit sub/supersolutions and the constants that make them work:
// global quadratic supersolution, exterior-sphere barrier, distance barrier,
// the ABP functional and the non-degeneracy root.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "degenlab/grid.hpp"
#include "degenlab/model.hpp"

namespace degenlab {

enum class BarrierKind { GlobalSuper, ExteriorSphere, DistanceBarrier };

const char* to_string(BarrierKind kind);
BarrierKind barrier_kind_from_string(const std::string& name);

/// One recorded inequality lhs >= rhs (strict ones are recorded with their margin).
struct BarrierInequality {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool strict = false;
  double margin() const { return lhs - rhs; }
  bool holds() const { return strict ? margin() > 0 : margin() >= 0; }
};

struct BarrierParams {
  BarrierKind kind = BarrierKind::GlobalSuper;
  std::map<std::string, double> values;
  std::vector<BarrierInequality> provenance;
  std::vector<std::string> notes;

  double at(const std::string& key) const;
};

/// Recomputes every inequality of `params` from its stored values.
std::vector<BarrierInequality> reverify(const BarrierParams& params);
bool all_hold(const std::vector<BarrierInequality>& checks);

/// sup |f| over the grid's non-Exterior nodes and sup |g| over its Dirichlet traces.
double source_sup(const ProblemSpec& spec, const Grid& grid);
double boundary_sup(const ProblemSpec& spec, const Grid& grid);

struct BarrierResult {
  GridFunction v;
  BarrierParams params;
};

/// v1 = Mbar - M*/(2 lambda n) |x - x0|^2 with M* = max{||f||/L1, lambda n} and Mbar minimal
/// (plus 1e-6) such that v1 > ||g|| on the Dirichlet nodes.
BarrierResult global_supersolution(const ProblemSpec& spec, const GridPtr& grid, const Point& x0);

/// v_z = K (r^-alpha0 - |x - x_z|^-alpha0), alpha0 = max{2, (1 + n Lambda)/lambda - 2} + 1e-3,
/// K = R^(1+alpha0) max{1, c0 + ||g||} / alpha0, R = r + diam.
BarrierResult exterior_sphere_barrier(const ProblemSpec& spec, const GridPtr& grid, const Point& z, const Point& x_z,
                                      double r);

struct DistanceDelta {
  double delta0 = 0;
  double bracket = 0;        // final bisection width (0 when the cap itself qualifies)
  double cap = 0;            // min{eta, (1 - r)/12}
  bool cap_limited = false;
  double margin_at_half = 0; // lhs - rhs at delta0 / 2
  BarrierParams params;
};

/// Inequality of the distance-barrier construction, lhs - rhs at delta.
double distance_barrier_margin(double delta, double gamma, double r, double K_geom, const EllipticityPair& ell,
                               int n, double f_sup, double L1, double p_min, double q_max);

/// Largest delta in (0, cap] satisfying the distance-barrier inequality; eta defaults to 1/(2 K_geom).
DistanceDelta distance_barrier_delta(const ProblemSpec& spec, double gamma, double r, double K_geom,
                                     std::optional<double> eta = std::nullopt);

/// Distance to the boundary piece carried by the graph (box faces when there is none).
double boundary_distance(const DomainSpec& domain, const Point& x);
/// sup of |D^2 phi| sampled on the grid (0 without a graph).
double graph_curvature_bound(const DomainSpec& domain, const Grid& grid);

/// v = (2/delta) d/(1 + d^gamma), plus (|y| - r)^3/(1 - r)^3 where |y| >= r.
GridFunction distance_barrier(const ProblemSpec& spec, const GridPtr& grid, double delta, double gamma, double r);

enum class BarrierSide { Upper, Lower };

struct SupersolutionCheck {
  bool pass = true;
  double worst_margin = -std::numeric_limits<double>::infinity();
  Index location = -1;
  std::size_t checked = 0;
};

/// Upper: H(x, grad v) M+_h(v) <= -||f|| + tol at interior nodes (restricted to `region` when given);
/// lower: H(x, grad v) M-_h(v) >= ||f|| - tol.
SupersolutionCheck verify_supersolution(const GridFunction& v, const ProblemSpec& spec, BarrierSide side, double tol,
                                        const std::vector<Index>* region = nullptr);

struct AbpBound {
  double bound = 0;
  double g_plus_sup = 0;
  double norm = 0;  // || f/(1+a) ||_{L^n}, midpoint rule over grid cells
  double term_pmin = 0;
  double term_qmax = 0;
};

AbpBound abp_bound(const ProblemSpec& spec, const Grid& grid, double C_user);

struct NondegeneracyConstant {
  double T0 = 0;
  double c_frak = 0;
  std::string branch = "small";
  double residual = 0;  // root function at T0
  double xi2 = 0;
  double xi3 = 0;
};

/// Root function of the non-degeneracy argument: large = false gives the t^(p_min+1) form.
double nondegeneracy_root_function(double t, double xi2, double xi3, double m, double p_min, double p_max,
                                   double q_max, bool large);

/// Smallest positive root T0 (bisection), c = T0/2; switches to the large branch when T0 > 1.
NondegeneracyConstant nondegeneracy_constant(const ProblemSpec& spec, double m);

}  // namespace degenlab
