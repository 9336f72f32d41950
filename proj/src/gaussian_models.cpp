#include "shapelab/gaussian_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "shapelab/parallel.hpp"
#include "shapelab/rng.hpp"

namespace shapelab {

namespace {

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Drops the sign of negative zeros so serialized output never shows "-0".
void clear_negative_zeros(Vector& v) { v.array() += 0.0; }

}  // namespace

ProductGaussianModel::ProductGaussianModel(Vector s, std::uint64_t sd) : sigma(std::move(s)), seed(sd) {
  if (sigma.size() == 0) {
    throw std::invalid_argument("product Gaussian model needs at least one coordinate");
  }
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw std::invalid_argument("product Gaussian model: sigma must be positive (degenerate coordinate)");
    }
  }
}

double kl_basis(int k, double t) {
  const double freq = (static_cast<double>(k) - 0.5) * std::numbers::pi;
  return std::numbers::sqrt2 * std::sin(freq * t) / freq;
}

GridFunction kl_path(const KLExpansion& expansion, int level) {
  const Eigen::Index n = (Eigen::Index{1} << level) + 1;
  const double dt = std::ldexp(1.0, -level);
  Vector values = Vector::Zero(n);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double sum = 0.0;
    for (int k = 1; k <= expansion.modes(); ++k) {
      sum += expansion.coefficients[k - 1] * kl_basis(k, t);
    }
    values[i] = sum;
  }
  return GridFunction(level, std::move(values));
}

GridFunction sample_wiener(const WienerModel& model) {
  GridFunction grid = GridFunction::zero(model.level);
  Vector values = grid.values();
  CounterRng rng(model.seed);
  const double step = std::sqrt(grid.spacing());
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    values[i] = values[i - 1] + step * rng.normal();
  }
  return GridFunction(model.level, std::move(values));
}

GridFunction bridge_refine(const GridFunction& f, std::uint64_t seed) {
  const Vector& v = f.values();
  const Eigen::Index cells = f.cells();
  const double midpoint_sd = std::sqrt(std::ldexp(1.0, -(f.level() + 2)));
  CounterRng rng(seed);
  Vector out(2 * cells + 1);
  for (Eigen::Index i = 0; i < cells; ++i) {
    out[2 * i] = v[i];
    out[2 * i + 1] = 0.5 * (v[i] + v[i + 1]) + midpoint_sd * rng.normal();
  }
  out[2 * cells] = v[cells];
  return GridFunction(f.level() + 1, std::move(out));
}

GridFunction sample_kl(int modes, int level, std::uint64_t seed) {
  if (modes < 1) {
    throw std::invalid_argument("KL expansion needs at least one mode");
  }
  KLExpansion expansion{Vector(modes)};
  CounterRng rng(seed);
  for (int k = 0; k < modes; ++k) {
    expansion.coefficients[k] = rng.normal();
  }
  return kl_path(expansion, level);
}

SeqPoint sample_product_gaussian(const ProductGaussianModel& model) {
  const SequenceSpace space(model.sigma, default_weights(static_cast<int>(model.dim())));
  return space.as_point(space.sample_measure(model.seed));
}

double cm_norm(const GridFunction& f) { return h12_norm(f); }

double cm_norm(const SeqPoint& x, const Vector& sigma) {
  if (x.dim() != sigma.size()) {
    throw std::invalid_argument("cm_norm: dimension mismatch");
  }
  return x.coords.cwiseQuotient(sigma).norm();
}

// ---------------------------------------------------------------------------

WienerSpace::WienerSpace(int level, int kl_modes) : level_(level), kl_modes_(kl_modes) {
  if (level < 1 || level > 16) {
    throw std::invalid_argument("Wiener space level must lie in [1, 16]");
  }
  if (kl_modes < 1 || kl_modes > (1 << level)) {
    throw std::invalid_argument("KL modes must lie in [1, 2^level]");
  }
  basis_.resize(dim(), kl_modes_);
  const double dt = std::ldexp(1.0, -level_);
  for (int k = 0; k < kl_modes_; ++k) {
    for (Eigen::Index i = 0; i < dim(); ++i) {
      basis_(i, k) = kl_basis(k + 1, static_cast<double>(i) * dt);
    }
  }
}

GridFunction WienerSpace::as_grid(const Vector& x) const {
  return GridFunction(level_, x);
}

double WienerSpace::metric(const Vector& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("Wiener space: dimension mismatch");
  }
  return x.cwiseAbs().maxCoeff();
}

double WienerSpace::cm_norm(const Vector& x) const { return h12_norm(as_grid(x)); }

Vector WienerSpace::sample_measure(std::uint64_t seed) const {
  return sample_wiener({level_, seed}).values();
}

Vector WienerSpace::sample_direction(std::uint64_t seed, int first_mode) const {
  if (first_mode < 0 || first_mode >= kl_modes_) {
    throw std::invalid_argument("stratum out of range");
  }
  CounterRng rng(seed);
  Vector xi(kl_modes_);
  for (int k = 0; k < kl_modes_; ++k) {
    xi[k] = rng.normal();
  }
  xi.head(first_mode).setZero();
  Vector path = basis_ * xi;
  path[0] = 0.0;
  return path;
}

nlohmann::json WienerSpace::describe() const {
  return {{"kind", "wiener"}, {"level", level_}, {"kl_modes", kl_modes_}};
}

SequenceSpace::SequenceSpace(int dim)
    : SequenceSpace(Vector::Ones(dim), default_weights(dim)) {}

SequenceSpace::SequenceSpace(Vector sigma, Vector weights)
    : SequenceSpace(sigma, SequenceMetric(weights, calibrate_metric_scale(sigma, weights))) {}

SequenceSpace::SequenceSpace(Vector sigma, SequenceMetric metric)
    : sigma_(std::move(sigma)), metric_(std::move(metric)) {
  ProductGaussianModel check(sigma_, 0);
  if (sigma_.size() != metric_.dim()) {
    throw std::invalid_argument("sequence space: sigma and weights differ in size");
  }
}

double SequenceSpace::cm_norm(const Vector& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("sequence space: dimension mismatch");
  }
  return x.cwiseQuotient(sigma_).norm();
}

Vector SequenceSpace::sample_measure(std::uint64_t seed) const {
  CounterRng rng(seed);
  Vector x(dim());
  for (Eigen::Index n = 0; n < dim(); ++n) {
    x[n] = sigma_[n] * rng.normal();
  }
  return x;
}

Vector SequenceSpace::sample_direction(std::uint64_t seed, int first_mode) const {
  if (first_mode < 0 || first_mode >= strata()) {
    throw std::invalid_argument("stratum out of range");
  }
  Vector x = sample_measure(seed);
  x.head(first_mode).setZero();
  return x;
}

nlohmann::json SequenceSpace::describe() const {
  return {{"kind", "sequence"},
          {"dim", dim()},
          {"sigma", to_std(sigma_)},
          {"weights", to_std(metric_.weights)},
          {"scale", metric_.scale}};
}

std::unique_ptr<GaussianSpace> make_space(const nlohmann::json& d) {
  const auto kind = d.at("kind").get<std::string>();
  if (kind == "wiener") {
    return std::make_unique<WienerSpace>(d.value("level", 8), d.value("kl_modes", kDefaultKlModes));
  }
  if (kind == "sequence") {
    const int dim = d.value("dim", kDefaultSequenceDim);
    const Vector sigma = d.contains("sigma") ? from_std(d["sigma"].get<std::vector<double>>())
                                             : Vector(Vector::Ones(dim));
    const Vector weights = d.contains("weights") ? from_std(d["weights"].get<std::vector<double>>())
                                                 : default_weights(static_cast<int>(sigma.size()));
    if (d.contains("scale")) {
      return std::make_unique<SequenceSpace>(sigma, SequenceMetric(weights, d["scale"].get<double>()));
    }
    return std::make_unique<SequenceSpace>(sigma, weights);
  }
  throw std::invalid_argument("unknown model kind: " + kind);
}

// ---------------------------------------------------------------------------

CMVector make_cm_vector(const GaussianSpace& space, Vector point) {
  const double norm = space.cm_norm(point);
  return {std::move(point), norm};
}

namespace {

CMVector normalized_direction(const GaussianSpace& space, std::uint64_t seed, int first_mode) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t draw_seed = attempt == 0 ? seed : derive_seed(seed, attempt);
    Vector x = space.sample_direction(draw_seed, first_mode);
    const double norm = space.cm_norm(x);
    if (norm > 0.0 && std::isfinite(norm)) {
      x /= norm;
      return make_cm_vector(space, std::move(x));
    }
  }
}

}  // namespace

CMVector sample_sphere_H(const GaussianSpace& space, std::uint64_t seed, bool negate) {
  CMVector v = normalized_direction(space, seed, 0);
  if (negate) {
    v.point = -v.point;
    clear_negative_zeros(v.point);
  }
  return v;
}

CMVector sample_sphere_H_stratum(const GaussianSpace& space, std::uint64_t seed, int first_mode) {
  return normalized_direction(space, seed, first_mode);
}

CMVector sample_sphere_plan(const GaussianSpace& space, std::uint64_t seed, std::size_t index) {
  const std::uint64_t s = derive_seed(seed, index);
  if (index % 2 == 0) {
    return sample_sphere_H(space, s);
  }
  const auto stratum = static_cast<int>((index / 2) % static_cast<std::size_t>(space.strata()));
  return sample_sphere_H_stratum(space, s, stratum);
}

nlohmann::json to_json(const CovarianceReport& r) {
  return {{"estimate", r.estimate}, {"stderr", r.stderr_}, {"N", r.samples}, {"seed", r.seed}};
}

double LinearFunctional::operator()(const Vector& x) const {
  double value = 0.0;
  for (const auto& [index, weight] : terms) {
    if (index < 0 || index >= x.size()) {
      throw std::invalid_argument("functional index out of range");
    }
    value += weight * x[index];
  }
  return value;
}

LinearFunctional coordinate_functional(Eigen::Index index) {
  if (index < 0) {
    throw std::invalid_argument("functional index must be nonnegative");
  }
  return {{{index, 1.0}}};
}

LinearFunctional evaluation_functional(int level, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("evaluation point must lie in [0, 1]");
  }
  const double scaled = std::ldexp(t, level);
  const auto cells = Eigen::Index{1} << level;
  const auto left = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(scaled)), cells);
  const double theta = scaled - static_cast<double>(left);
  if (left == cells || theta == 0.0) {
    return {{{left, 1.0}}};
  }
  return {{{left, 1.0 - theta}, {left + 1, theta}}};
}

CovarianceReport covariance_estimate(const GaussianSpace& space, const LinearFunctional& f,
                                     const LinearFunctional& g, std::size_t samples,
                                     std::uint64_t seed) {
  if (samples < 100) {
    throw std::invalid_argument("covariance estimate needs at least 100 samples");
  }
  std::vector<double> products(samples);
  parallel_for(samples, [&](std::size_t i) {
    const Vector x = space.sample_measure(derive_seed(seed, i));
    products[i] = f(x) * g(x);
  });
  double mean = 0.0;
  for (double p : products) mean += p;
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (double p : products) var += (p - mean) * (p - mean);
  var /= static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples, seed};
}

Eigen::Index grid_index(int level, double t) {
  const double scaled = std::ldexp(t, level);
  const double rounded = std::round(scaled);
  if (t < 0.0 || t > 1.0 || std::abs(scaled - rounded) > 1e-9) {
    throw std::invalid_argument("time is not a node of the grid");
  }
  return static_cast<Eigen::Index>(rounded);
}

}  // namespace shapelab
