#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "shapelab/grid_function.hpp"
#include "shapelab/sequence_space.hpp"

namespace shapelab {

/// Default number of Karhunen-Loeve modes used to sample Cameron-Martin directions.
inline constexpr int kDefaultKlModes = 64;

struct WienerModel {
  int level = 10;
  std::uint64_t seed = 0;
};

/// Truncated Karhunen-Loeve series sum_k xi_k e_k with
/// e_k(t) = sqrt(2) sin((k - 1/2) pi t) / ((k - 1/2) pi), k = 1..modes.
/// Each e_k has unit W_0^{1,2} norm and the family is orthonormal there.
struct KLExpansion {
  Vector coefficients;

  int modes() const { return static_cast<int>(coefficients.size()); }
};

/// Independent centered coordinates with standard deviations sigma.
struct ProductGaussianModel {
  Vector sigma;
  std::uint64_t seed = 0;

  ProductGaussianModel() = default;
  ProductGaussianModel(Vector sigma, std::uint64_t seed);

  Eigen::Index dim() const { return sigma.size(); }
};

double kl_basis(int k, double t);  ///< k is 1-based
GridFunction kl_path(const KLExpansion& expansion, int level);

/// Brownian path: cumulative sum of N(0, 2^-level) increments.
GridFunction sample_wiener(const WienerModel& model);

/// Doubles the resolution with Brownian-bridge midpoints: each new node is the
/// average of its neighbours plus an independent N(0, 2^-(level+2)) deviate.
GridFunction bridge_refine(const GridFunction& f, std::uint64_t seed);

/// KL series with independent standard Gaussian coefficients.
GridFunction sample_kl(int modes, int level, std::uint64_t seed);

/// Uses the model's sigma with default weights and the calibrated metric scale.
SeqPoint sample_product_gaussian(const ProductGaussianModel& model);

/// Cameron-Martin norm of the Wiener model: the discrete Dirichlet energy norm.
double cm_norm(const GridFunction& f);
/// Cameron-Martin norm of the product model: sqrt(sum x_n^2 / sigma_n^2).
double cm_norm(const SeqPoint& x, const Vector& sigma);

/// An ambient space X carrying a centered Gaussian measure, discretized.
///
/// Points are plain coordinate vectors: grid values for the Wiener space,
/// truncated coordinates for the sequence space. `metric` is d(0, x) for a
/// translation-invariant metric normalized so that its sup over the
/// Cameron-Martin unit ball is 1.
class GaussianSpace {
 public:
  virtual ~GaussianSpace() = default;

  virtual std::string kind() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual double metric(const Vector& x) const = 0;
  double distance(const Vector& x, const Vector& y) const { return metric(x - y); }
  virtual double cm_norm(const Vector& x) const = 0;

  /// A draw from the Gaussian measure.
  virtual Vector sample_measure(std::uint64_t seed) const = 0;

  /// Gaussian direction in H whose coefficients below `first_mode` vanish
  /// (not yet normalized). first_mode in [0, strata()).
  virtual Vector sample_direction(std::uint64_t seed, int first_mode) const = 0;
  virtual int strata() const = 0;

  virtual nlohmann::json describe() const = 0;
};

class WienerSpace final : public GaussianSpace {
 public:
  explicit WienerSpace(int level = 8, int kl_modes = kDefaultKlModes);

  int level() const { return level_; }
  int kl_modes() const { return kl_modes_; }
  GridFunction as_grid(const Vector& x) const;

  std::string kind() const override { return "wiener"; }
  Eigen::Index dim() const override { return (Eigen::Index{1} << level_) + 1; }
  double metric(const Vector& x) const override;  ///< sup norm
  double cm_norm(const Vector& x) const override;
  Vector sample_measure(std::uint64_t seed) const override;
  Vector sample_direction(std::uint64_t seed, int first_mode) const override;
  int strata() const override { return kl_modes_; }
  nlohmann::json describe() const override;

 private:
  int level_;
  int kl_modes_;
  Eigen::MatrixXd basis_;  // dim x kl_modes, e_k sampled on the grid
};

class SequenceSpace final : public GaussianSpace {
 public:
  /// sigma = 1, weights 2^-n, calibrated scale.
  explicit SequenceSpace(int dim = kDefaultSequenceDim);
  /// Calibrated scale for the given sigma and weights.
  SequenceSpace(Vector sigma, Vector weights);
  /// Explicit metric (may be uncalibrated; used by tests and controls).
  SequenceSpace(Vector sigma, SequenceMetric metric);

  const Vector& sigma() const { return sigma_; }
  const SequenceMetric& sequence_metric() const { return metric_; }
  SeqPoint as_point(const Vector& x) const { return SeqPoint(x, metric_); }

  std::string kind() const override { return "sequence"; }
  Eigen::Index dim() const override { return sigma_.size(); }
  double metric(const Vector& x) const override { return metric_.norm(x); }
  double cm_norm(const Vector& x) const override;
  Vector sample_measure(std::uint64_t seed) const override;
  Vector sample_direction(std::uint64_t seed, int first_mode) const override;
  int strata() const override { return static_cast<int>(sigma_.size()); }
  nlohmann::json describe() const override;

 private:
  Vector sigma_;
  SequenceMetric metric_;
};

/// Builds a space from its describe() JSON.
std::unique_ptr<GaussianSpace> make_space(const nlohmann::json& description);

/// A point of H with its cached Cameron-Martin norm.
struct CMVector {
  Vector point;
  double cm_norm = 0.0;
};

CMVector make_cm_vector(const GaussianSpace& space, Vector point);

/// Uniform-direction sample on the Cameron-Martin unit sphere S^H. With
/// `negate` the antithetic partner -x of the same draw is returned.
CMVector sample_sphere_H(const GaussianSpace& space, std::uint64_t seed, bool negate = false);

/// Sample on S^H supported on modes/coordinates >= first_mode. High strata
/// reach the part of the sphere close to 0 in the ambient metric.
CMVector sample_sphere_H_stratum(const GaussianSpace& space, std::uint64_t seed, int first_mode);

/// Sphere sampling plan shared by the shape verifiers and the atom builder's
/// diagnostics: even indices draw plain sphere samples, odd index i draws
/// stratum (i / 2) mod strata(). Sample i uses derive_seed(seed, i).
CMVector sample_sphere_plan(const GaussianSpace& space, std::uint64_t seed, std::size_t index);

struct CovarianceReport {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const CovarianceReport& report);

/// A continuous linear functional realized as a finite weighted sum of
/// coordinates: f(x) = sum_k weight_k * x[index_k].
struct LinearFunctional {
  std::vector<std::pair<Eigen::Index, double>> terms;

  double operator()(const Vector& x) const;
};

/// f(x) = x[index]: coordinate projection (sequence model) or node evaluation.
LinearFunctional coordinate_functional(Eigen::Index index);

/// Point evaluation delta_t of the piecewise-linear interpolant on `level`.
LinearFunctional evaluation_functional(int level, double t);

/// Monte Carlo estimate of R_mu(f)(g) = E[f(x) g(x)] over `samples` draws of
/// the space's measure. Requires samples >= 100.
CovarianceReport covariance_estimate(const GaussianSpace& space, const LinearFunctional& f,
                                     const LinearFunctional& g, std::size_t samples,
                                     std::uint64_t seed);

/// Grid index of node t on the given level; throws if t is not a node.
Eigen::Index grid_index(int level, double t);

}  // namespace shapelab
