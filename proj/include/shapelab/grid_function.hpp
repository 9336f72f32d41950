#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>

namespace shapelab {

using Vector = Eigen::VectorXd;

/// Largest level for which the Hölder scan visits every grid pair by default.
inline constexpr int kExactHolderMaxLevel = 12;

/// A path on the dyadic grid t_i = i * 2^-level of [0, 1], pinned at f(0) = 0.
///
/// All norms treat the path as its piecewise-linear interpolant. The sup norm,
/// modulus of continuity and Dirichlet energy of the interpolant are attained
/// at grid nodes, so the node-based formulas are exact for them. Hölder
/// quotients are taken over grid pairs only; between nodes the interpolant's
/// true Hölder constant can be larger.
class GridFunction {
 public:
  GridFunction() = default;
  /// Throws std::invalid_argument unless values has 2^level + 1 finite
  /// entries with values[0] == 0.
  GridFunction(int level, Vector values);

  static GridFunction zero(int level);
  /// Samples f at the grid nodes. f(0) must evaluate to exactly 0.
  static GridFunction sample(int level, const std::function<double(double)>& f);

  int level() const { return level_; }
  Eigen::Index size() const { return values_.size(); }
  Eigen::Index cells() const { return values_.size() - 1; }
  double spacing() const;
  double node(Eigen::Index i) const { return static_cast<double>(i) * spacing(); }

  const Vector& values() const { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }

  GridFunction operator-() const;
  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double s);

 private:
  int level_ = 0;
  Vector values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction f);
GridFunction operator*(GridFunction f, double s);

/// How holder_norm enumerates grid pairs.
enum class HolderScan {
  kAuto,       ///< kExact up to kExactHolderMaxLevel, kDyadicLags above.
  kExact,      ///< every pair (i, j), i != j
  kDyadicLags  ///< pairs whose lag |i - j| is a power of two (lower bound)
};

double sup_norm(const GridFunction& f);

/// max_{i != j} |f_i - f_j| / |t_i - t_j|^alpha. Requires 0 < alpha < 1.
double holder_norm(const GridFunction& f, double alpha,
                   HolderScan scan = HolderScan::kAuto);

/// omega(delta) = max over node pairs with |t_i - t_j| <= delta of |f_i - f_j|.
/// Requires 0 < delta <= 1.
double modulus_of_continuity(const GridFunction& f, double delta);

/// Localized Hölder constant: holder quotient restricted to 0 < |t_i - t_j| <= delta.
/// Nondecreasing in delta and equal to holder_norm at delta = 1. Throws if
/// delta is below the grid spacing (no admissible pair).
double small_holder_defect(const GridFunction& f, double alpha, double delta);

/// Dirichlet-energy (W_0^{1,2}) norm of the piecewise-linear interpolant.
double h12_norm(const GridFunction& f);

/// Inserts midpoints by linear interpolation; the interpolant is unchanged.
GridFunction refine(const GridFunction& f);

/// Restriction to the next coarser grid (even-index nodes).
GridFunction coarsen(const GridFunction& f);

/// CSV with header `t,value`, one row per node, 17 significant digits.
void write_csv(std::ostream& os, const GridFunction& f);
GridFunction read_grid_csv(std::istream& is);

}  // namespace shapelab
