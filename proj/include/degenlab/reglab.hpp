#pragma once

// Regularity measurements on discrete solutions: dyadic oscillation profiles,
// log-log exponent fits, closed-form exponents, scaling and exact oracles.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "degenlab/grid.hpp"
#include "degenlab/model.hpp"
#include "degenlab/solver.hpp"

namespace degenlab {

struct OscillationProfile {
  Point center;
  std::vector<double> radii;      // decreasing
  std::vector<double> osc0;       // sup |u - u(x0)|
  std::vector<double> osc1_grad;  // sup |u - l| with l anchored at the discrete gradient
  std::vector<double> osc1_lsq;   // least-squares affine, made monotone in r
  double gradient_norm = 0;       // |grad_h u(x0)|
};

/// Requires x0 to be an interior node and radii >= 2h.
OscillationProfile oscillation_profile(const GridFunction& u, const Point& x0, const std::vector<double>& radii);

/// r0 = a quarter of the distance from x0 to the boundary, halved while >= 4h.
std::vector<double> default_radii(const Grid& grid, const Point& x0);

struct ExponentEstimate {
  int order = 0;
  double slope = 0;
  double intercept = 0;
  double r_squared = 1;
  double alpha = 0;  // order 0: slope, order 1: slope - 1
  double r_min = 0;
  double r_max = 0;
  int used = 0;
};

/// Least squares on (ln r, ln osc) with osc > 1e-14; order 1 uses osc1_lsq.
ExponentEstimate fit_exponent(const OscillationProfile& profile, int order);
ExponentEstimate fit_power_law(const std::vector<double>& r, const std::vector<double>& osc, int order = 0);

inline constexpr double kAlphaFMargin = 1e-6;

/// min{alpha_F (minus 1e-6 unless attained), 1/(p_max+1), beta_g}.
double sharp_alpha(double alpha_F, double p_max, double beta_g, bool alpha_F_attained = false);
double pointwise_alpha(double p_at_x0);
/// (p_max + 2)/(p_max + 1 - sigma).
double deadcore_exponent(double p_max, double sigma);

struct NondegeneracyVerdict {
  double r = 0;
  double quotient = 0;  // sup over the shell of (u - u(x0)) / r^(1 + 1/(p_min+1))
  bool pass = false;
  bool skipped = false;
};

struct NondegeneracyReport {
  std::vector<NondegeneracyVerdict> verdicts;
  std::vector<std::string> warnings;
  bool all_pass() const;
};

NondegeneracyReport nondegeneracy_check(const GridFunction& u, const Point& x0, const std::vector<double>& radii,
                                        double c0, double p_min);

/// Rescaled problem for v(x) = u(x0 + tau x)/kappa on the preimage of the domain.
ProblemSpec scale_problem(const ProblemSpec& spec, double kappa, double tau, const Point& x0);

struct EquivarianceReport {
  double max_mismatch = 0;
  std::size_t compared = 0;
  SolveReport original;
  SolveReport scaled;
};

/// Solves the original problem, then the rescaled one on [-1, 1]^n with h/tau and Dirichlet data
/// read from the original discrete solution, and compares v(x) with u(x0 + tau x)/kappa.
EquivarianceReport scale_equivariance_test(const ProblemSpec& spec, double kappa, double tau, const Point& x0,
                                           const SolveOptions& opts);

struct GrowthVerdict {
  Index node = -1;
  double distance = 0;
  double deviation = 0;  // |u - g(foot)|
  double envelope = 0;   // (2/delta) d/(1 + d^gamma)
  bool pass = true;
};

struct GrowthReport {
  std::vector<GrowthVerdict> verdicts;
  bool pass = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
};

/// Checks |u - g| <= (2/delta) d/(1 + d^gamma) + 10h on nodes with d < delta.
GrowthReport boundary_growth_check(const GridFunction& u, const ProblemSpec& spec, double delta, double gamma);

struct LipschitzEstimate {
  double value = 0;
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  std::vector<std::string> warnings;
};

inline constexpr std::uint64_t kDefaultSeed = 20240611;

/// All pairs within 4h plus 1000 random pairs drawn with a fixed seed.
LipschitzEstimate lipschitz_quotient(const GridFunction& u, const std::vector<Index>& region,
                                     std::uint64_t seed = kDefaultSeed);

struct RadialSolution {
  GridFunction u;
  double c = 0;
  double beta = 0;
};

/// c |x - x_center|^beta solving |Du|^p Lap u = 1 (or = u^sigma when sigma is given).
RadialSolution exact_radial_solution(double p, int n, std::optional<double> sigma, const GridPtr& grid,
                                     const Point& x_center);
/// Closed-form (c, beta) of the radial profile.
std::pair<double, double> radial_constants(double p, int n, std::optional<double> sigma);

}  // namespace degenlab
