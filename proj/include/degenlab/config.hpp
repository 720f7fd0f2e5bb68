#pragma once

// JSON experiment configs. Scalar fields are {"const": v} or {"expr": "..."};
// unknown keys are rejected at every level.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "degenlab/model.hpp"
#include "degenlab/solver.hpp"

namespace degenlab {

inline constexpr int kSchemaVersion = 1;

struct FieldSource {
  std::optional<double> constant;
  std::string expr;

  static FieldSource of(double value);
  static FieldSource formula(std::string text);
  /// Parses the expression eagerly, so errors surface here.
  ScalarField build(int dim) const;
  bool operator==(const FieldSource&) const = default;
};

struct DomainConfig {
  std::vector<double> lower;
  std::vector<double> upper;
  std::optional<FieldSource> graph;  // over x1..x(n-1)
};

struct OperatorConfig {
  std::string kind = "pucci_plus";  // pucci_plus | pucci_minus | linear_trace
  double lambda = 1;
  double Lambda = 1;
  std::vector<FieldSource> diagonal;  // linear_trace only
};

struct LawConfig {
  FieldSource p = FieldSource::of(1);
  FieldSource q = FieldSource::of(1);
  FieldSource a = FieldSource::of(0);
  double L1 = 1;
  double L2 = 1;
  double eps_gradient_scale = 1;
};

struct VariantConfig {
  std::string kind = "plain";  // plain | deadcore | obstacle
  double sigma = 0;
  std::optional<FieldSource> f0;
  std::optional<FieldSource> obstacle;
};

struct ProblemConfig {
  DomainConfig domain;
  OperatorConfig op;
  LawConfig law;
  FieldSource source = FieldSource::of(0);
  FieldSource boundary = FieldSource::of(0);
  double beta_g = 1;
  std::vector<double> shift;
  VariantConfig variant;
  double properness_scale = 1;
};

struct NondegeneracyConfig {
  double m = 1;  // lower bound of the source
  std::vector<double> radii;
};

struct ProbeConfig {
  std::vector<std::vector<double>> centers;
  std::vector<double> radii;  // empty: default ladder per center
  double alpha_F = 1;
  bool alpha_F_attained = true;
  std::optional<NondegeneracyConfig> nondegeneracy;
};

struct SphereConfig {
  std::vector<double> z;
  std::vector<double> center;
  double r = 0;
};

struct DistanceConfig {
  double gamma = 0.5;
  double r = 0.5;
  std::optional<double> K_geom;  // default: sampled curvature bound of the graph
  std::optional<double> eta;
};

struct BarrierConfig {
  std::optional<std::vector<double>> global_center;
  std::vector<SphereConfig> spheres;
  std::optional<DistanceConfig> distance;
  double abp_C = 1;
  std::optional<double> nondegeneracy_m;
};

struct ScalingConfig {
  double kappa = 1;
  double tau = 1;
  std::vector<double> x0;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::optional<std::string> experiment;
  ProblemConfig problem;
  SolveOptions solve;
  ProbeConfig probe;
  BarrierConfig barriers;
  ScalingConfig scaling;
  std::string out;
};

/// Throws ValidationError on unknown keys, wrong types or a schema version mismatch.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
/// Throws IoError when the file cannot be read, ValidationError when it is not JSON.
ExperimentConfig load_config(const std::string& path);

ProblemSpec build_problem(const ProblemConfig& config);

}  // namespace degenlab
