#include "shapelab/sequence_space.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace shapelab {

namespace {

// Root of a (1 + a)^2 = q for q >= 0. The left side is increasing on a >= 0.
double cubic_root(double q) {
  if (q <= 0.0) {
    return 0.0;
  }
  double lo = 0.0;
  double hi = std::max(q, std::cbrt(q));
  double a = std::min(hi, std::cbrt(q));
  for (int iter = 0; iter < 200; ++iter) {
    const double f = a * (1.0 + a) * (1.0 + a) - q;
    if (f > 0.0) {
      hi = a;
    } else {
      lo = a;
    }
    const double df = (1.0 + a) * (1.0 + 3.0 * a);
    double next = a - f / df;
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - a) <= 1e-16 * std::max(1.0, a)) {
      return next;
    }
    a = next;
  }
  return a;
}

void require_positive(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw std::invalid_argument(std::string(what) + " must be positive and finite");
    }
  }
}

}  // namespace

Vector default_weights(int dim) {
  if (dim < 1) {
    throw std::invalid_argument("sequence dimension must be positive");
  }
  Vector w(dim);
  for (int n = 0; n < dim; ++n) {
    w[n] = std::ldexp(1.0, -(n + 1));
  }
  return w;
}

SequenceMetric::SequenceMetric(Vector w, double s) : weights(std::move(w)), scale(s) {
  if (weights.size() == 0) {
    throw std::invalid_argument("metric needs at least one weight");
  }
  require_positive(weights, "metric weights");
  for (Eigen::Index i = 1; i < weights.size(); ++i) {
    if (weights[i] > weights[i - 1]) {
      throw std::invalid_argument("metric weights must be nonincreasing");
    }
  }
  if (weights.sum() > 1.0 + 1e-12) {
    throw std::invalid_argument("metric weights must sum to at most 1");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("metric scale must be positive");
  }
}

double SequenceMetric::distance(const Vector& x, const Vector& y) const {
  if (x.size() != dim() || y.size() != dim()) {
    throw std::invalid_argument("sequence metric: dimension mismatch");
  }
  double total = 0.0;
  for (Eigen::Index n = 0; n < dim(); ++n) {
    const double gap = std::abs(x[n] - y[n]);
    total += weights[n] * (gap / (1.0 + gap));
  }
  return scale * total;
}

double SequenceMetric::norm(const Vector& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("sequence metric: dimension mismatch");
  }
  double total = 0.0;
  for (Eigen::Index n = 0; n < dim(); ++n) {
    const double a = std::abs(x[n]);
    total += weights[n] * (a / (1.0 + a));
  }
  return scale * total;
}

SeqPoint::SeqPoint(Vector c, SequenceMetric m) : coords(std::move(c)), metric(std::move(m)) {
  if (coords.size() != metric.dim()) {
    throw std::invalid_argument("SeqPoint: coordinate count differs from weight count");
  }
  if (!coords.allFinite()) {
    throw std::invalid_argument("SeqPoint: coordinates must be finite");
  }
}

double frechet_metric(const SeqPoint& x, const SeqPoint& y) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("frechet_metric: dimension mismatch");
  }
  if (!(x.metric == y.metric)) {
    throw std::invalid_argument("frechet_metric: points carry different metrics");
  }
  return x.metric.distance(x.coords, y.coords);
}

double ellipsoid_metric_sup(const Vector& sigma, const Vector& weights) {
  if (sigma.size() != weights.size() || sigma.size() == 0) {
    throw std::invalid_argument("calibration: sigma and weights must match in size");
  }
  require_positive(sigma, "sigma");
  require_positive(weights, "weights");

  const Eigen::Index dim = sigma.size();
  std::vector<double> a(dim);
  auto solve_for = [&](double mu) {
    double constraint = 0.0;
    for (Eigen::Index n = 0; n < dim; ++n) {
      const double s2 = sigma[n] * sigma[n];
      a[n] = cubic_root(weights[n] * s2 / mu);
      constraint += a[n] * a[n] / s2;
    }
    return constraint;
  };

  // constraint(mu) decreases from +inf to 0; bracket the unit crossing.
  double lo = 1.0;
  double hi = 1.0;
  while (solve_for(lo) < 1.0) lo *= 0.5;
  while (solve_for(hi) > 1.0) hi *= 2.0;
  for (int iter = 0; iter < 300 && hi - lo > 1e-17 * hi; ++iter) {
    const double mid = std::sqrt(lo * hi);
    if (solve_for(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double constraint = solve_for(hi);
  // Project onto the boundary so the reported value is attained by a feasible point.
  const double shrink = constraint > 1.0 ? 1.0 / std::sqrt(constraint) : 1.0;
  double value = 0.0;
  for (Eigen::Index n = 0; n < dim; ++n) {
    const double an = a[n] * shrink;
    value += weights[n] * an / (1.0 + an);
  }
  return value;
}

double calibrate_metric_scale(const Vector& sigma, const Vector& weights) {
  return 1.0 / ellipsoid_metric_sup(sigma, weights);
}

nlohmann::json to_json(const SeqPoint& p) {
  return {
      {"coords", std::vector<double>(p.coords.data(), p.coords.data() + p.coords.size())},
      {"weights",
       {{"values", std::vector<double>(p.metric.weights.data(),
                                       p.metric.weights.data() + p.metric.weights.size())},
        {"scale", p.metric.scale}}},
  };
}

SeqPoint seq_point_from_json(const nlohmann::json& j) {
  const auto coords = j.at("coords").get<std::vector<double>>();
  const auto weights = j.at("weights").at("values").get<std::vector<double>>();
  const double scale = j.at("weights").at("scale").get<double>();
  return SeqPoint(Eigen::Map<const Vector>(coords.data(), static_cast<Eigen::Index>(coords.size())),
                  SequenceMetric(Eigen::Map<const Vector>(weights.data(),
                                                          static_cast<Eigen::Index>(weights.size())),
                                 scale));
}

}  // namespace shapelab
