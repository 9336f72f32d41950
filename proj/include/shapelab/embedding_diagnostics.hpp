#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "shapelab/gaussian_models.hpp"
#include "shapelab/shape_functions.hpp"

namespace shapelab {

/// Distance used for covering numbers.
struct NetMetric {
  std::string name;
  std::function<double(const Vector&, const Vector&)> distance;
};

NetMetric sup_net_metric();
NetMetric frechet_net_metric(SequenceMetric metric);
/// Hölder seminorm of the difference; points must be grid vectors.
NetMetric holder_net_metric(double alpha);
/// "sup", "frechet_seq" (default sequence metric of dimension `dim`) or "holder:ALPHA".
NetMetric parse_net_metric(const std::string& id, Eigen::Index dim);

struct CoveringReport {
  double epsilon = 0.0;
  std::string metric;
  std::size_t net_size = 0;
  std::size_t sample_count = 0;
  std::size_t half_net_size = 0;  ///< net size after the first half of the input
  bool saturated = false;         ///< net grew < saturation_tol over the second half
  std::vector<std::size_t> centers;
};

nlohmann::json to_json(const CoveringReport& report);

/// First-fit greedy epsilon-net in input order. Because the scan is greedy,
/// the net after the first half of the input is the net of that half, so one
/// pass measures the growth under sample doubling.
CoveringReport greedy_net(const std::vector<Vector>& points, double epsilon, const NetMetric& metric,
                          double saturation_tol = 0.05);

/// Rescans every point against the net centers.
bool verify_cover(const std::vector<Vector>& points, const CoveringReport& report, const NetMetric& metric);

/// Uniform sample of the Cameron-Martin unit ball in the space's truncation:
/// uniform direction times radius U^(1/strata).
Vector sample_ball_H(const GaussianSpace& space, std::uint64_t seed);

/// Nets of phi(S^H) images (uniform-direction sphere samples) per epsilon,
/// each over the largest sample count with saturation judged over the last
/// doubling. Uses the space's own metric.
std::vector<CoveringReport> compactness_profile(const ShapeFunction& phi, const GaussianSpace& space,
                                                const std::vector<double>& eps_list,
                                                std::size_t samples, std::uint64_t seed);

/// Same for B^H samples.
std::vector<CoveringReport> ball_covering_profile(const GaussianSpace& space,
                                                  const std::vector<double>& eps_list,
                                                  std::size_t samples, std::uint64_t seed);

struct MeasureEstimate {
  double radius = 0.0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::string model;
};

struct FullMeasureReport {
  double alpha = 0.0;
  int level = 0;
  std::vector<MeasureEstimate> cdf;
  double crossing_radius = -1.0;  ///< first r with p_hat >= 0.99, -1 if none
  bool monotone = false;
  bool pass = false;
};

nlohmann::json to_json(const FullMeasureReport& report);
void write_cdf_csv(std::ostream& os, const FullMeasureReport& report);

/// Empirical CDF of the alpha-Hölder norm of N Wiener paths on a fixed path set.
FullMeasureReport full_measure_mc(double alpha, const std::vector<double>& r_list, std::size_t samples,
                                  int level, std::uint64_t seed);

struct DichotomyRow {
  double alpha = 0.0;
  std::vector<double> medians;  ///< one per level
  std::vector<double> ratios;   ///< consecutive-level ratios of the medians
  std::string regime;           ///< "stable", "divergent" or "none"
  bool pass = false;
};

struct DichotomyConfig {
  double stable_tol = 0.20;        ///< |ratio - 1| <= tol for alpha <= 0.4
  double divergent_factor = 0.9;   ///< ratio >= 2^(alpha - 1/2) * factor for alpha >= 0.6
};

struct DichotomyReport {
  std::vector<int> levels;
  std::size_t samples = 0;
  std::vector<DichotomyRow> rows;
  bool pass = false;
};

nlohmann::json to_json(const DichotomyReport& report);

/// Wiener paths sampled on the first level and refined by Brownian bridges,
/// so each level sees the same paths.
DichotomyReport dichotomy_sweep(const std::vector<double>& alphas, const std::vector<int>& levels,
                                std::size_t samples, std::uint64_t seed, const DichotomyConfig& config = {});

/// Median Hölder norm of the deterministic path f(t) = t at each level.
std::vector<double> line_holder_medians(double alpha, const std::vector<int>& levels);

struct CsReport {
  std::size_t samples = 0;
  double max_ratio = 0.0;           ///< max |f(a) - f(b)| / sqrt(b - a) over unit paths
  std::size_t violations = 0;       ///< unit paths above 1 + 1e-9
  std::size_t precondition_failures = 0;  ///< paths with |cm_norm - 1| > 1e-9
  double max_ratio_unnormalized = 0.0;
  bool pass = false;
};

nlohmann::json to_json(const CsReport& report);

/// Discrete Cauchy-Schwarz bound on given paths (exhaustive pair scan).
CsReport cs_bound_check(const std::vector<GridFunction>& paths);
/// N KL paths with 64 modes normalized to unit discrete energy.
CsReport cs_bound_check(std::size_t samples, int level, std::uint64_t seed);

/// Unit-energy path with independent Gaussian coefficients on KL modes
/// first_mode .. first_mode + modes - 1 (1-based), normalized on the grid.
GridFunction unit_band_path(int level, int first_mode, int modes, std::uint64_t seed);

struct SmallBallRow {
  double epsilon = 0.0;
  double bound = 0.0;           ///< (2 eps)^(1 - 2 alpha)
  std::size_t filtered = 0;     ///< paths with sup < eps
  double max_holder = 0.0;
  double sharpest = 0.0;        ///< max holder / bound
  std::size_t violations = 0;
};

struct SmallBallReport {
  double alpha = 0.0;
  int level = 0;
  std::size_t samples = 0;
  std::vector<SmallBallRow> rows;
  bool pass = false;  ///< no violations and every row has filtered paths
};

nlohmann::json to_json(const SmallBallReport& report);

/// Unit-energy paths from high KL bands (first mode cycling over
/// [min_band, max_band)), filtered to sup < eps.
SmallBallReport small_ball_holder_bound(const std::vector<double>& eps_list, double alpha,
                                        std::size_t samples, int level, std::uint64_t seed,
                                        int min_band = 100, int max_band = 400);

struct WitnessConfig {
  double alpha = 0.25;
  double alpha_prime = 0.6;
  double tolerance = 0.15;
};

struct WitnessReport {
  std::vector<int> levels;
  std::size_t samples = 0;
  std::vector<double> h12_medians, h12_ratios;
  std::vector<double> line_h12;
  std::vector<double> alpha_medians, alpha_ratios;
  std::vector<double> alpha_prime_medians, alpha_prime_ratios;
  bool h12_pass = false;
  bool line_pass = false;
  bool chain_pass = false;
  bool pass = false;
};

nlohmann::json to_json(const WitnessReport& report);

WitnessReport containment_witnesses(const std::vector<int>& levels, std::size_t samples, std::uint64_t seed,
                                    const WitnessConfig& config = {});

struct SmallHolderReport {
  double alpha = 0.0;
  int level = 0;
  std::size_t samples = 0;
  std::vector<double> deltas;
  std::vector<double> median_defects;
  double full_defect = 0.0;  ///< median defect at delta = 1
  double ratio = 0.0;        ///< median defect at the smallest delta over full_defect
  bool decreasing = false;
  bool pass = false;         ///< decreasing and ratio < ratio_threshold
};

nlohmann::json to_json(const SmallHolderReport& report);

SmallHolderReport small_holder_membership(double alpha, const std::vector<double>& deltas,
                                          std::size_t samples, int level, std::uint64_t seed,
                                          double ratio_threshold = 0.5);

double median(std::vector<double> values);

}  // namespace shapelab
