#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "shapelab/gaussian_models.hpp"
#include "shapelab/shape_functions.hpp"

namespace shapelab {

/// A finite symmetric atom set {+-g_1, ..., +-g_m}. Only the generators are
/// stored; atom 2k is +g_k and atom 2k+1 is -g_k, so the set is symmetric by
/// construction and prefixes of a seeded build are nested.
class AtomSet {
 public:
  AtomSet() = default;
  /// Columns of `generators` are the g_k. Throws on non-finite entries.
  AtomSet(Eigen::MatrixXd generators, nlohmann::json provenance);

  Eigen::Index ambient_dim() const { return generators_.rows(); }
  std::size_t generator_count() const { return static_cast<std::size_t>(generators_.cols()); }
  std::size_t size() const { return 2 * generator_count(); }
  const Eigen::MatrixXd& generators() const { return generators_; }
  Vector atom(std::size_t index) const;
  const nlohmann::json& provenance() const { return provenance_; }

  /// The first m generators (and their negations).
  AtomSet prefix(std::size_t m) const;

  /// Largest d(0, atom); the unit-ball normalization requires <= 1 + 1e-9.
  double max_metric(const GaussianSpace& space) const;

 private:
  Eigen::MatrixXd generators_;
  nlohmann::json provenance_ = nlohmann::json::object();
};

/// m sphere samples (sample_sphere_plan) mapped through eval_shape.
AtomSet build_atoms(const ShapeFunction& phi, const GaussianSpace& space, std::size_t m,
                    std::uint64_t seed);

/// CSV: one generator per row, 17 significant digits. The JSON sidecar
/// carries the provenance.
void write_atoms_csv(std::ostream& os, const AtomSet& atoms);
AtomSet read_atoms_csv(std::istream& is, nlohmann::json provenance = nlohmann::json::object());

enum class GaugeStatus { kOptimal, kInfeasible, kTolerance };
std::string to_string(GaugeStatus status);

struct GaugeResult {
  double value = 0.0;  ///< +infinity when the query is outside the atom span
  std::vector<std::pair<std::size_t, double>> weights;  ///< (atom index, lambda > 0)
  double residual = 0.0;  ///< ||sum lambda a - x||_2 (out-of-span part when infeasible)
  GaugeStatus status = GaugeStatus::kOptimal;
  std::size_t iterations = 0;
};

nlohmann::json to_json(const GaugeResult& result);

/// Residual and span tolerances are absolute for ||x|| <= 1 and relative above.
inline constexpr double kGaugeTolerance = 1e-8;

/// Minkowski gauge of conv(atoms): min sum lambda s.t. sum lambda_i a_i = x,
/// lambda >= 0. The atom span is factored once (column-pivoted QR) and each
/// query solves the LP in span coordinates. Immutable after construction, so
/// queries may run concurrently.
class GaugeEngine {
 public:
  explicit GaugeEngine(AtomSet atoms);

  const AtomSet& atoms() const { return atoms_; }
  Eigen::Index rank() const { return basis_.cols(); }
  GaugeResult operator()(const Vector& x) const;

 private:
  AtomSet atoms_;
  Eigen::MatrixXd basis_;    // ambient x rank, orthonormal
  Eigen::MatrixXd reduced_;  // rank x generators
  std::vector<Eigen::Index> start_;
};

GaugeResult gauge(const Vector& x, const AtomSet& atoms);

/// Reference gauge for small problems: the minimum weight sum over every
/// independent subset of at most ambient_dim atoms reproducing x. Throws
/// std::invalid_argument above 16 atoms.
double vertex_enumeration_gauge(const Vector& x, const AtomSet& atoms);

/// gauge(x) <= r + 1e-8.
bool membership(const Vector& x, double r, const AtomSet& atoms);
bool membership(const Vector& x, double r, const GaugeEngine& engine);

/// Diagnostic only: min sum lambda + rho * ||sum lambda a - x||_1 in ambient
/// coordinates. Always feasible; never a gauge value.
struct PenalizedResult {
  double objective = 0.0;
  double weight_sum = 0.0;
  double residual_l1 = 0.0;
  std::vector<std::pair<std::size_t, double>> weights;
  bool converged = false;
};

PenalizedResult penalized_gauge(const Vector& x, const AtomSet& atoms, double rho);

/// Gauge values on nested prefixes of one seeded atom build, one row per
/// query and one column per schedule entry. Nonincreasing along each row.
std::vector<std::vector<GaugeResult>> gauge_profile(const std::vector<Vector>& queries,
                                                    const ShapeFunction& phi,
                                                    const GaussianSpace& space,
                                                    const std::vector<std::size_t>& schedule,
                                                    std::uint64_t seed);
std::vector<GaugeResult> gauge_profile(const Vector& x, const ShapeFunction& phi,
                                       const GaussianSpace& space,
                                       const std::vector<std::size_t>& schedule,
                                       std::uint64_t seed);

struct SandwichReport {
  double holder = 0.0;
  double gauge = 0.0;
  double gap = 0.0;  ///< gauge - holder
  bool lower_holds = false;  ///< holder <= gauge + 1e-8 (true for infinite gauge)
  GaugeStatus status = GaugeStatus::kOptimal;
};

nlohmann::json to_json(const SandwichReport& report);

SandwichReport sandwich_check(const GridFunction& x, double alpha, const GaugeEngine& engine);

/// Adds extra generators, each shrunk to d(0, y) = 1 when it lies outside the
/// closed metric unit ball (t found by bisection on d(0, t y) = 1).
AtomSet enlarge_atoms(const AtomSet& atoms, const std::vector<Vector>& extra,
                      const GaussianSpace& space);

/// Adjoins m draws of the space's measure conditioned, by rejection, to
/// d(0, x) <= 1. Throws std::runtime_error when the acceptance rate falls
/// below 0.1% (checked after 1000 attempts).
AtomSet full_measure_enlargement(const AtomSet& atoms, const GaussianSpace& space, std::size_t m,
                                 std::uint64_t seed);

struct LscReport {
  double limit_value = 0.0;
  double tail_min = std::numeric_limits<double>::infinity();
  std::vector<double> sequence_values;
  bool violation = false;  ///< limit_value > tail_min + 0.05
};

nlohmann::json to_json(const LscReport& report);

/// Compares the gauge at the limit with the minimum over the last half of
/// the sequence.
LscReport lsc_probe(const std::vector<Vector>& sequence, const Vector& limit,
                    const GaugeEngine& engine);

/// The gauge as a NormFunction, for reciprocal_norm_shape.
NormFunction gauge_norm_function(std::shared_ptr<const GaugeEngine> engine);

}  // namespace shapelab
