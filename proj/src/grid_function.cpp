#include "shapelab/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapelab {

namespace {

constexpr int kMaxLevel = 24;

Eigen::Index node_count(int level) {
  return (Eigen::Index{1} << level) + 1;
}

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (a.level() != b.level()) {
    throw std::invalid_argument("grid functions live on different levels");
  }
}

double max_increment_at_lag(const Vector& v, Eigen::Index lag) {
  const double* p = v.data();
  const Eigen::Index last = v.size() - lag;
  double best = 0.0;
  for (Eigen::Index i = 0; i < last; ++i) {
    best = std::max(best, std::abs(p[i + lag] - p[i]));
  }
  return best;
}

// max over admissible lags h <= max_lag of max_i |v[i+h] - v[i]| / (h dt)^alpha.
//
// A lag can only beat the running best if min(range, h * max_step) * w(h) does,
// so lags failing that bound are skipped without changing the result.
double max_lag_quotient(const GridFunction& f, double alpha, Eigen::Index max_lag,
                        bool dyadic_only) {
  const Vector& v = f.values();
  const double dt = f.spacing();
  const double range = v.maxCoeff() - v.minCoeff();
  if (range == 0.0) {
    return 0.0;
  }
  const double max_step = max_increment_at_lag(v, 1);
  auto weight = [&](Eigen::Index h) {
    return alpha == 0.0 ? 1.0 : std::pow(static_cast<double>(h) * dt, -alpha);
  };

  double best = max_step * weight(1);
  if (max_lag > 1) {
    best = std::max(best, max_increment_at_lag(v, max_lag) * weight(max_lag));
  }
  for (Eigen::Index h = 2; h < max_lag; ++h) {
    if (dyadic_only && (h & (h - 1)) != 0) {
      continue;
    }
    const double w = weight(h);
    const double bound = std::min(range, static_cast<double>(h) * max_step) * w;
    if (bound <= best) {
      continue;
    }
    best = std::max(best, max_increment_at_lag(v, h) * w);
  }
  return best;
}

Eigen::Index lags_within(const GridFunction& f, double delta) {
  // Dyadic spacing makes delta / dt exact for dyadic delta; the epsilon guards
  // against decimal inputs such as 0.3 landing a hair below an integer.
  const double ratio = delta / f.spacing();
  return static_cast<Eigen::Index>(std::floor(ratio * (1.0 + 1e-12)));
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("Hölder exponent must lie in (0, 1)");
  }
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1]");
  }
}

}  // namespace

GridFunction::GridFunction(int level, Vector values)
    : level_(level), values_(std::move(values)) {
  if (level < 1 || level > kMaxLevel) {
    throw std::invalid_argument("grid level must lie in [1, 24]");
  }
  if (values_.size() != node_count(level)) {
    throw std::invalid_argument("grid function needs 2^level + 1 values");
  }
  if (values_[0] != 0.0) {
    throw std::invalid_argument("grid function must start at 0");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("grid function values must be finite");
  }
}

GridFunction GridFunction::zero(int level) {
  if (level < 1 || level > kMaxLevel) {
    throw std::invalid_argument("grid level must lie in [1, 24]");
  }
  return GridFunction(level, Vector::Zero(node_count(level)));
}

GridFunction GridFunction::sample(int level, const std::function<double(double)>& f) {
  if (level < 1 || level > kMaxLevel) {
    throw std::invalid_argument("grid level must lie in [1, 24]");
  }
  const Eigen::Index n = node_count(level);
  const double dt = std::ldexp(1.0, -level);
  Vector values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values[i] = f(static_cast<double>(i) * dt);
  }
  return GridFunction(level, std::move(values));
}

double GridFunction::spacing() const { return std::ldexp(1.0, -level_); }

GridFunction GridFunction::operator-() const {
  GridFunction out = *this;
  out.values_ = -out.values_;
  // -0.0 compares equal to 0.0, but keep the pinned node bit-exact.
  out.values_[0] = 0.0;
  return out;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require_same_grid(*this, other);
  values_ += other.values_;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require_same_grid(*this, other);
  values_ -= other.values_;
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  if (!std::isfinite(s)) {
    throw std::invalid_argument("scale factor must be finite");
  }
  values_ *= s;
  values_[0] = 0.0;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction f) { return f *= s; }
GridFunction operator*(GridFunction f, double s) { return f *= s; }

double sup_norm(const GridFunction& f) { return f.values().cwiseAbs().maxCoeff(); }

double holder_norm(const GridFunction& f, double alpha, HolderScan scan) {
  require_alpha(alpha);
  if (scan == HolderScan::kAuto) {
    scan = f.level() <= kExactHolderMaxLevel ? HolderScan::kExact : HolderScan::kDyadicLags;
  }
  return max_lag_quotient(f, alpha, f.cells(), scan == HolderScan::kDyadicLags);
}

double modulus_of_continuity(const GridFunction& f, double delta) {
  require_delta(delta);
  const Eigen::Index max_lag = lags_within(f, delta);
  if (max_lag < 1) {
    return 0.0;
  }
  return max_lag_quotient(f, 0.0, max_lag, false);
}

double small_holder_defect(const GridFunction& f, double alpha, double delta) {
  require_alpha(alpha);
  require_delta(delta);
  const Eigen::Index max_lag = lags_within(f, delta);
  if (max_lag < 1) {
    throw std::invalid_argument("delta is below the grid spacing; no pairs to scan");
  }
  return max_lag_quotient(f, alpha, max_lag, false);
}

double h12_norm(const GridFunction& f) {
  const Vector& v = f.values();
  const Eigen::Index n = f.cells();
  double energy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = v[i + 1] - v[i];
    energy += d * d;
  }
  return std::sqrt(energy / f.spacing());
}

GridFunction refine(const GridFunction& f) {
  const Vector& v = f.values();
  const Eigen::Index n = f.cells();
  Vector out(2 * n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[2 * i] = v[i];
    out[2 * i + 1] = 0.5 * (v[i] + v[i + 1]);
  }
  out[2 * n] = v[n];
  return GridFunction(f.level() + 1, std::move(out));
}

GridFunction coarsen(const GridFunction& f) {
  if (f.level() < 2) {
    throw std::invalid_argument("cannot coarsen below level 1");
  }
  const Eigen::Index n = f.cells() / 2;
  Vector out(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) {
    out[i] = f[2 * i];
  }
  return GridFunction(f.level() - 1, std::move(out));
}

void write_csv(std::ostream& os, const GridFunction& f) {
  const auto old_precision = os.precision();
  os << "t,value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    os << f.node(i) << ',' << f[i] << '\n';
  }
  os.precision(old_precision);
}

GridFunction read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,value", 0) != 0) {
    throw std::runtime_error("grid CSV must start with header 't,value'");
  }
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("malformed grid CSV row: " + line);
    }
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  const auto cells = values.empty() ? 0 : values.size() - 1;
  if (cells == 0 || (cells & (cells - 1)) != 0) {
    throw std::runtime_error("grid CSV row count must be 2^level + 1");
  }
  int level = 0;
  while ((std::size_t{1} << level) < cells) {
    ++level;
  }
  return GridFunction(level, Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
}

}  // namespace shapelab
