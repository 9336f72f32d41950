#include "shapelab/symmetric_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "shapelab/rng.hpp"

namespace shapelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPerturbation = 1e-7;

double column_sign(Eigen::Index column) { return (column & 1) ? -1.0 : 1.0; }

class Simplex {
 public:
  Simplex(const PairedLp& lp, const PairedLpOptions& options)
      : g_(*lp.generators), cost_(lp.cost), b_(lp.rhs), options_(options), rows_(g_.rows()) {
    if (cost_.size() != g_.cols() || b_.size() != rows_ ||
        static_cast<Eigen::Index>(lp.start.size()) != rows_) {
      throw std::invalid_argument("paired LP dimensions disagree");
    }
    if ((cost_.array() <= 0.0).any()) {
      throw std::invalid_argument("paired LP costs must be positive");
    }
    cap_ = options_.max_iterations ? options_.max_iterations
                                   : 20 * static_cast<std::size_t>(rows_ + 2 * g_.cols()) + 1000;
    refactor_every_ = options_.refactor_every > 0 ? options_.refactor_every
                                                  : std::max<int>(64, static_cast<int>(rows_));
    basis_.resize(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) basis_[i] = 2 * lp.start[i];
    rhs_ = b_;
    refactor();
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (x_[i] < 0.0) {
        basis_[i] ^= 1;
        x_[i] = -x_[i];
        binv_.row(i) *= -1.0;
      }
    }
  }

  PairedLpSolution run() {
    // Degenerate vertices (most basic values zero) stall Dantzig pricing, so
    // the first pass solves a problem whose starting basic values are all
    // strictly positive; the true right-hand side is restored afterwards and
    // any small infeasibility is repaired by dual simplex pivots.
    CounterRng rng(0x5eedULL + static_cast<std::uint64_t>(rows_));
    const double scale = kPerturbation * std::max(1.0, b_.cwiseAbs().maxCoeff());
    Eigen::VectorXd shift(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) shift[i] = scale * (0.5 + rng.uniform());
    rhs_ = b_ + basis_matrix() * shift;
    refactor();

    PairedLpSolution out;
    bool ok = primal();
    rhs_ = b_;
    refactor();
    if (ok) ok = dual();
    if (ok) ok = primal();
    refactor();
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (x_[i] < 0.0 && x_[i] > -1e-12 * std::max(1.0, b_.cwiseAbs().maxCoeff())) x_[i] = 0.0;
    }
    out.status = ok ? PairedLpSolution::Status::kOptimal
                    : (iterations_ >= cap_ ? PairedLpSolution::Status::kIterationCap
                                           : PairedLpSolution::Status::kNumerical);
    out.iterations = iterations_;
    out.basis = basis_;
    out.values = x_;
    out.objective = 0.0;
    for (Eigen::Index i = 0; i < rows_; ++i) out.objective += cost_[basis_[i] >> 1] * x_[i];
    return out;
  }

 private:
  Eigen::VectorXd duals() const {
    Eigen::VectorXd cb(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) cb[i] = cost_[basis_[i] >> 1];
    return binv_.transpose() * cb;
  }

  // Returns true at optimality, false on the iteration cap or a breakdown.
  bool primal() {
    int degenerate = 0;
    bool bland = false;
    int retries = 0;
    for (; iterations_ < cap_; ++iterations_) {
      if (++since_refactor_ >= refactor_every_) refactor();

      const Eigen::VectorXd s = g_.transpose() * duals();
      Eigen::Index entering = -1;
      double best = -options_.optimality_tol;
      for (Eigen::Index k = 0; k < g_.cols(); ++k) {
        const double reduced = cost_[k] - std::abs(s[k]);
        if (reduced < best) {
          entering = 2 * k + (s[k] < 0.0 ? 1 : 0);
          if (bland) break;
          best = reduced;
        }
      }
      if (entering < 0) return true;

      const Eigen::VectorXd u = binv_ * (column_sign(entering) * g_.col(entering >> 1));
      Eigen::Index leaving = -1;
      double step = kInf;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        if (u[i] <= options_.pivot_tol) continue;
        const double t = std::max(x_[i], 0.0) / u[i];
        bool better = leaving < 0 || t < step * (1.0 - 1e-12);
        if (!better && t <= step * (1.0 + 1e-12)) {
          better = bland ? basis_[i] < basis_[leaving] : u[i] > u[leaving];
        }
        if (better) {
          leaving = i;
          step = t;
        }
      }
      if (leaving < 0) {
        // Positive costs bound the objective below, so an unbounded ray
        // means the inverse has drifted.
        if (++retries > 3) return false;
        refactor();
        continue;
      }
      degenerate = step <= 1e-14 ? degenerate + 1 : 0;
      if (degenerate > options_.degenerate_before_bland) bland = true;
      pivot(leaving, entering, u, step);
    }
    return false;
  }

  // Dual simplex from a dual-feasible basis until x_B >= 0.
  bool dual() {
    const double feas = 1e-13 * std::max(1.0, b_.cwiseAbs().maxCoeff());
    for (; iterations_ < cap_; ++iterations_) {
      if (++since_refactor_ >= refactor_every_) refactor();
      Eigen::Index leaving = -1;
      double worst = -feas;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        if (x_[i] < worst) {
          worst = x_[i];
          leaving = i;
        }
      }
      if (leaving < 0) {
        for (Eigen::Index i = 0; i < rows_; ++i) x_[i] = std::max(x_[i], 0.0);
        return true;
      }
      const Eigen::VectorXd s = g_.transpose() * duals();
      const Eigen::VectorXd row = g_.transpose() * binv_.row(leaving).transpose();
      Eigen::Index entering = -1;
      double ratio = kInf;
      for (Eigen::Index k = 0; k < g_.cols(); ++k) {
        for (int sign = 0; sign < 2; ++sign) {
          const double alpha = sign ? -row[k] : row[k];
          if (alpha >= -options_.pivot_tol) continue;
          const double reduced = std::max(0.0, cost_[k] - (sign ? -s[k] : s[k]));
          const double t = reduced / -alpha;
          if (t < ratio) {
            ratio = t;
            entering = 2 * k + sign;
          }
        }
      }
      if (entering < 0) return false;
      const Eigen::VectorXd u = binv_ * (column_sign(entering) * g_.col(entering >> 1));
      pivot(leaving, entering, u, x_[leaving] / u[leaving]);
    }
    return false;
  }

  void pivot(Eigen::Index leaving, Eigen::Index entering, const Eigen::VectorXd& u, double step) {
    x_ -= step * u;
    x_[leaving] = step;
    basis_[leaving] = entering;
    const Eigen::RowVectorXd pivot_row = binv_.row(leaving) / u[leaving];
    Eigen::VectorXd eta = u;
    eta[leaving] = 0.0;
    binv_.noalias() -= eta * pivot_row;
    binv_.row(leaving) = pivot_row;
  }

  Eigen::MatrixXd basis_matrix() const {
    Eigen::MatrixXd m(rows_, rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) m.col(i) = column_sign(basis_[i]) * g_.col(basis_[i] >> 1);
    return m;
  }

  void refactor() {
    const Eigen::MatrixXd m = basis_matrix();
    binv_ = m.partialPivLu().inverse();
    x_ = binv_ * rhs_;
    for (int pass = 0; pass < 2; ++pass) x_ += binv_ * (rhs_ - m * x_);
    since_refactor_ = 0;
  }

  const Eigen::MatrixXd& g_;
  const Eigen::VectorXd& cost_;
  const Eigen::VectorXd& b_;
  PairedLpOptions options_;
  Eigen::Index rows_;
  std::size_t cap_ = 0;
  std::size_t iterations_ = 0;
  int since_refactor_ = 0;
  int refactor_every_ = 64;
  Eigen::VectorXd rhs_;
  std::vector<Eigen::Index> basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_;
};

}  // namespace

PairedLpSolution solve_paired_lp(const PairedLp& lp, const PairedLpOptions& options) {
  if (lp.generators == nullptr) throw std::invalid_argument("paired LP without generators");
  if (lp.generators->rows() == 0) return {};
  return Simplex(lp, options).run();
}

}  // namespace shapelab
