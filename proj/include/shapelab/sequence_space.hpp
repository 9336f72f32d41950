#pragma once

#include <nlohmann/json.hpp>

#include "shapelab/grid_function.hpp"

namespace shapelab {

/// Default truncation dimension of the sequence model.
inline constexpr int kDefaultSequenceDim = 64;

/// Weights w_n = 2^-n, n = 1..dim.
Vector default_weights(int dim);

/// Parameters of the bounded translation-invariant metric
///   d(x, y) = scale * sum_n w_n |x_n - y_n| / (1 + |x_n - y_n|)
/// on truncated sequences. Weights are positive and nonincreasing.
struct SequenceMetric {
  Vector weights;
  double scale = 1.0;

  SequenceMetric() = default;
  SequenceMetric(Vector weights, double scale);

  Eigen::Index dim() const { return weights.size(); }
  double distance(const Vector& x, const Vector& y) const;
  double norm(const Vector& x) const;  ///< d(0, x)
  double bound() const { return scale * weights.sum(); }

  friend bool operator==(const SequenceMetric&, const SequenceMetric&) = default;
};

/// A point of the truncated sequence model together with its metric.
struct SeqPoint {
  Vector coords;
  SequenceMetric metric;

  SeqPoint() = default;
  SeqPoint(Vector coords, SequenceMetric metric);

  Eigen::Index dim() const { return coords.size(); }
};

/// d(x, y); throws std::invalid_argument on mismatched dimension or weights.
double frechet_metric(const SeqPoint& x, const SeqPoint& y);

/// Scale c making sup { d(0, x) : sum_n x_n^2 / sigma_n^2 <= 1 } equal to 1.
///
/// Each term w_n g(|x_n|), g(a) = a / (1 + a), is increasing and concave, so
/// the sup sits on the ellipsoid boundary where w_n g'(a_n) = mu a_n / sigma_n^2
/// for a common multiplier mu. For fixed mu each a_n solves a cubic; mu is
/// then found by bisection on the constraint.
double calibrate_metric_scale(const Vector& sigma, const Vector& weights);

/// Uncalibrated sup of sum_n w_n g(|x_n|) over the ellipsoid.
double ellipsoid_metric_sup(const Vector& sigma, const Vector& weights);

nlohmann::json to_json(const SeqPoint& p);
SeqPoint seq_point_from_json(const nlohmann::json& j);

}  // namespace shapelab
