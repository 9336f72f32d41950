#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shapelab/gaussian_models.hpp"

namespace shapelab {

/// A norm evaluated on points of a GaussianSpace.
struct NormFunction {
  std::string name;
  nlohmann::json params;
  std::function<double(const GaussianSpace&, const Vector&)> evaluate;
};

/// Hölder norm of grid points; requires a WienerSpace.
NormFunction holder_norm_function(double alpha);

/// The compact set T used by the property (b) proxy, with a finite-resolution
/// distance oracle standing in for a net of T.
struct TargetSet {
  enum class Kind { kNone, kOrigin, kNormBall };

  Kind kind = Kind::kNone;
  std::optional<NormFunction> norm;  // kNormBall only
  double radius = 1.0;
  /// Resolution of the net standing in for T. Exact oracles use the
  /// configured floor (ShapeCheckConfig::net_resolution).
  double net_resolution = 0.0;

  static TargetSet origin();
  static TargetSet norm_ball(NormFunction norm, double radius = 1.0);

  /// Upper bound on dist(y, T) in the space's metric. For a norm ball the
  /// radial projection y * radius / ||y|| is the witness. Throws when no
  /// distance oracle is available.
  double distance(const GaussianSpace& space, const Vector& y) const;
  nlohmann::json describe() const;
};

/// phi(x) = |phi|(x) x on the Cameron-Martin unit sphere, plus an optional
/// constant offset that only the non-radial negative controls use.
struct ShapeFunction {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  std::function<double(const GaussianSpace&, const Vector&)> radial_factor;
  TargetSet target;
  std::optional<Vector> offset;
  std::string role = "shape";  ///< "shape" or "negative control: ..."

  nlohmann::json describe() const;
};

/// |phi|(x) = floor(d(0, x)^alpha), alpha in (-1, 0), T = {0}. Needs a metric
/// normalized so that d(0, x) <= 1 on S^H, which makes the factor >= 1.
ShapeFunction floor_metric_shape(double alpha);

/// |phi|(x) = 1 / ||x||, T = closed unit ball of the norm.
ShapeFunction reciprocal_norm_shape(NormFunction norm);
ShapeFunction reciprocal_holder_shape(double alpha);

/// Negative controls.
ShapeFunction identity_shape();                    ///< |phi| = 1: fails property (d)
ShapeFunction constant_factor_shape(double factor);  ///< 1/2 fails the codomain; huge factors fail compactness
ShapeFunction asymmetric_shape();                  ///< k(x) != k(-x): fails property (a)
ShapeFunction offset_shape(Vector offset);         ///< x + v: fails property (b)

/// |phi|(x) for x on S^H. Throws unless cm_norm(x) is 1 within 1e-9, and if
/// the factor is not a positive finite number.
double radial_factor(const ShapeFunction& phi, const GaussianSpace& space, const CMVector& x);
Vector eval_shape(const ShapeFunction& phi, const GaussianSpace& space, const CMVector& x);

/// phi(x) = sqrt<x,x> phi(x / sqrt<x,x>) for x != 0 and phi(0) = 0.
Vector homogeneous_extension(const ShapeFunction& phi, const GaussianSpace& space, const Vector& x);

/// Documented pass thresholds of the finite-sample verifiers.
struct ShapeCheckConfig {
  double oddness_tol = 1e-12;
  double codomain_tol = 1e-9;
  /// Net resolution assumed for exact target oracles; property (b) passes
  /// when the final sup distance is below 10x this value.
  double net_resolution = 1e-3;
  double stability_tol = 0.10;   ///< property (c): relative sup increase when N doubles
  double growth_factor = 2.0;    ///< property (d): required inf growth at the last radius step
  double divergence_cap = 1e3;   ///< property (d): an inf above this passes outright
};

enum class ShapeProperty { kA, kB, kC, kD, kCodomain };
std::string to_string(ShapeProperty p);

struct ShapeCheckRow {
  double parameter = 0.0;  ///< radius or epsilon
  std::size_t count = 0;   ///< samples in the region
  double value = 0.0;      ///< sup/inf statistic over the region
  double value_doubled = 0.0;  ///< property (c): statistic with 2N samples
};

struct ShapeCheckReport {
  ShapeProperty property = ShapeProperty::kA;
  std::size_t samples_used = 0;
  double statistic = 0.0;
  bool pass = false;
  std::vector<ShapeCheckRow> table;
  std::string note;
};

nlohmann::json to_json(const ShapeCheckReport& report);

ShapeCheckReport check_property_a(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::size_t samples, std::uint64_t seed,
                                  const ShapeCheckConfig& config = {});
ShapeCheckReport check_codomain(const ShapeFunction& phi, const GaussianSpace& space,
                                std::size_t samples, std::uint64_t seed,
                                const ShapeCheckConfig& config = {});
ShapeCheckReport check_property_b(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::vector<double> radii, std::size_t samples,
                                  std::uint64_t seed, const ShapeCheckConfig& config = {});
ShapeCheckReport check_property_c(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::vector<double> eps_list, std::size_t samples,
                                  std::uint64_t seed, const ShapeCheckConfig& config = {});
ShapeCheckReport check_property_d(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::vector<double> radii, std::size_t samples,
                                  std::uint64_t seed, const ShapeCheckConfig& config = {});

/// Radius and epsilon schedules for the (b), (c), (d) checks.
struct ShapeCheckSchedule {
  std::vector<double> b_radii;
  std::vector<double> c_eps;
  std::vector<double> d_radii;
};

/// Default schedules for a built-in shape on a space (see catalog docs).
ShapeCheckSchedule default_schedule(const ShapeFunction& phi, const GaussianSpace& space);

/// Runs a, codomain, b, c, d in that order.
std::vector<ShapeCheckReport> check_all(const ShapeFunction& phi, const GaussianSpace& space,
                                        const ShapeCheckSchedule& schedule, std::size_t samples,
                                        std::uint64_t seed, const ShapeCheckConfig& config = {});

/// Parses "floor:alpha=-0.5", "reciprocal-holder:alpha=0.25", "identity",
/// "constant:factor=0.5", "asymmetric".
ShapeFunction parse_shape(const std::string& spec);

}  // namespace shapelab
