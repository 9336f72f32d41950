#include "shapelab/generated_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "shapelab/parallel.hpp"
#include "shapelab/rng.hpp"
#include "shapelab/symmetric_lp.hpp"

namespace shapelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQrThreshold = 1e-11;

double tolerance_for(const Vector& x) { return kGaugeTolerance * std::max(1.0, x.norm()); }

Vector combine(const AtomSet& atoms, const std::vector<std::pair<std::size_t, double>>& weights) {
  Vector sum = Vector::Zero(atoms.ambient_dim());
  for (const auto& [index, lambda] : weights) {
    const double sign = (index & 1) ? -1.0 : 1.0;
    sum += sign * lambda * atoms.generators().col(static_cast<Eigen::Index>(index / 2));
  }
  return sum;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

AtomSet::AtomSet(Eigen::MatrixXd generators, nlohmann::json provenance)
    : generators_(std::move(generators)), provenance_(std::move(provenance)) {
  if (!generators_.allFinite()) {
    throw std::invalid_argument("atoms must be finite");
  }
}

Vector AtomSet::atom(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("atom index out of range");
  const double sign = (index & 1) ? -1.0 : 1.0;
  return sign * generators_.col(static_cast<Eigen::Index>(index / 2));
}

AtomSet AtomSet::prefix(std::size_t m) const {
  if (m > generator_count()) throw std::invalid_argument("prefix longer than the atom set");
  nlohmann::json provenance = provenance_;
  provenance["count"] = m;
  return AtomSet(generators_.leftCols(static_cast<Eigen::Index>(m)), std::move(provenance));
}

double AtomSet::max_metric(const GaussianSpace& space) const {
  if (space.dim() != ambient_dim()) throw std::invalid_argument("atom dimension does not match the space");
  double best = 0.0;
  for (Eigen::Index k = 0; k < generators_.cols(); ++k) {
    best = std::max(best, space.metric(generators_.col(k)));
  }
  return best;
}

AtomSet build_atoms(const ShapeFunction& phi, const GaussianSpace& space, std::size_t m,
                    std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("build_atoms needs at least one sample");
  Eigen::MatrixXd generators(space.dim(), static_cast<Eigen::Index>(m));
  parallel_for(m, [&](std::size_t i) {
    generators.col(static_cast<Eigen::Index>(i)) = eval_shape(phi, space, sample_sphere_plan(space, seed, i));
  });
  return AtomSet(std::move(generators), {{"shape", phi.describe()},
                                         {"space", space.describe()},
                                         {"seed", seed},
                                         {"count", m},
                                         {"symmetric", true}});
}

void write_atoms_csv(std::ostream& os, const AtomSet& atoms) {
  os << std::setprecision(17);
  const auto& g = atoms.generators();
  for (Eigen::Index k = 0; k < g.cols(); ++k) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (i > 0) os << ',';
      os << g(i, k);
    }
    os << '\n';
  }
}

AtomSet read_atoms_csv(std::istream& is, nlohmann::json provenance) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("atom CSV: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("atom CSV: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("atom CSV: no atoms");
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[k][i];
    }
  }
  return AtomSet(std::move(g), std::move(provenance));
}

std::string to_string(GaugeStatus status) {
  switch (status) {
    case GaugeStatus::kOptimal: return "optimal";
    case GaugeStatus::kInfeasible: return "infeasible";
    case GaugeStatus::kTolerance: return "tolerance";
  }
  return "?";
}

nlohmann::json to_json(const GaugeResult& r) {
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& [index, lambda] : r.weights) weights.push_back({index, lambda});
  return {{"value", finite_or_null(r.value)},
          {"status", to_string(r.status)},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"weights", std::move(weights)}};
}

// ---------------------------------------------------------------------------

GaugeEngine::GaugeEngine(AtomSet atoms) : atoms_(std::move(atoms)) {
  const auto& g = atoms_.generators();
  if (g.cols() == 0) {
    basis_.resize(g.rows(), 0);
    reduced_.resize(0, 0);
    return;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g);
  qr.setThreshold(kQrThreshold);
  const Eigen::Index r = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ();
  basis_ = q.leftCols(r);
  reduced_ = basis_.transpose() * g;
  const auto& perm = qr.colsPermutation().indices();
  start_.assign(perm.data(), perm.data() + r);
}

GaugeResult GaugeEngine::operator()(const Vector& x) const {
  if (x.size() != atoms_.ambient_dim()) {
    throw std::invalid_argument("query dimension does not match the atoms");
  }
  GaugeResult out;
  if ((x.array() == 0.0).all()) return out;

  const double tol = tolerance_for(x);
  const Vector b = basis_.transpose() * x;
  const double out_of_span = (x - basis_ * b).norm();
  if (rank() == 0 || out_of_span > tol) {
    out.value = kInf;
    out.residual = out_of_span;
    out.status = GaugeStatus::kInfeasible;
    return out;
  }

  PairedLp lp{&reduced_, Vector::Ones(reduced_.cols()), b, start_};
  const auto solution = solve_paired_lp(lp);
  out.iterations = solution.iterations;
  out.value = 0.0;
  for (std::size_t i = 0; i < solution.basis.size(); ++i) {
    const double lambda = solution.values[static_cast<Eigen::Index>(i)];
    if (lambda <= 0.0) continue;
    out.weights.emplace_back(static_cast<std::size_t>(solution.basis[i]), lambda);
    out.value += lambda;
  }
  std::sort(out.weights.begin(), out.weights.end());
  out.residual = (combine(atoms_, out.weights) - x).norm();
  const bool optimal = solution.status == PairedLpSolution::Status::kOptimal;
  out.status = optimal && out.residual <= tol ? GaugeStatus::kOptimal : GaugeStatus::kTolerance;
  return out;
}

GaugeResult gauge(const Vector& x, const AtomSet& atoms) { return GaugeEngine(atoms)(x); }

double vertex_enumeration_gauge(const Vector& x, const AtomSet& atoms) {
  if (atoms.size() > 16) throw std::invalid_argument("vertex enumeration limited to 16 atoms");
  if (x.size() != atoms.ambient_dim()) throw std::invalid_argument("query dimension mismatch");
  if (x.isZero(0.0)) return 0.0;
  const auto n = static_cast<unsigned>(atoms.size());
  const auto dim = atoms.ambient_dim();
  const double tol = kGaugeTolerance * std::max(1.0, x.norm());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int k = std::popcount(mask);
    if (k > dim) continue;
    Eigen::MatrixXd a(dim, k);
    int c = 0;
    for (unsigned i = 0; i < n; ++i) {
      if (mask & (1u << i)) a.col(c++) = atoms.atom(i);
    }
    const auto qr = a.colPivHouseholderQr();
    if (qr.rank() < k) continue;
    const Vector lambda = qr.solve(x);
    if ((a * lambda - x).norm() > tol || lambda.minCoeff() < 0.0) continue;
    best = std::min(best, lambda.sum());
  }
  return best;
}

bool membership(const Vector& x, double r, const GaugeEngine& engine) {
  if (!(r > 0.0)) throw std::invalid_argument("membership radius must be positive");
  return engine(x).value <= r + kGaugeTolerance;
}

bool membership(const Vector& x, double r, const AtomSet& atoms) {
  return membership(x, r, GaugeEngine(atoms));
}

PenalizedResult penalized_gauge(const Vector& x, const AtomSet& atoms, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("penalty must be positive");
  if (x.size() != atoms.ambient_dim()) throw std::invalid_argument("query dimension does not match the atoms");
  const Eigen::Index n = atoms.ambient_dim();
  const Eigen::Index m = static_cast<Eigen::Index>(atoms.generator_count());
  Eigen::MatrixXd columns(n, m + n);
  columns << atoms.generators(), Eigen::MatrixXd::Identity(n, n);
  Vector cost(m + n);
  cost << Vector::Ones(m), Vector::Constant(n, rho);
  std::vector<Eigen::Index> start(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) start[static_cast<std::size_t>(i)] = m + i;

  const auto solution = solve_paired_lp({&columns, cost, x, start});
  PenalizedResult out;
  out.converged = solution.status == PairedLpSolution::Status::kOptimal;
  out.objective = solution.objective;
  for (std::size_t i = 0; i < solution.basis.size(); ++i) {
    const double lambda = solution.values[static_cast<Eigen::Index>(i)];
    if (lambda <= 0.0) continue;
    if ((solution.basis[i] >> 1) < m) {
      out.weights.emplace_back(static_cast<std::size_t>(solution.basis[i]), lambda);
      out.weight_sum += lambda;
    } else {
      out.residual_l1 += lambda;
    }
  }
  std::sort(out.weights.begin(), out.weights.end());
  return out;
}

std::vector<std::vector<GaugeResult>> gauge_profile(const std::vector<Vector>& queries,
                                                    const ShapeFunction& phi,
                                                    const GaussianSpace& space,
                                                    const std::vector<std::size_t>& schedule,
                                                    std::uint64_t seed) {
  if (schedule.empty() || !std::is_sorted(schedule.begin(), schedule.end()) ||
      std::adjacent_find(schedule.begin(), schedule.end()) != schedule.end()) {
    throw std::invalid_argument("gauge_profile schedule must be strictly increasing");
  }
  const AtomSet all = build_atoms(phi, space, schedule.back(), seed);
  std::vector<std::vector<GaugeResult>> out(queries.size(), std::vector<GaugeResult>(schedule.size()));
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const GaugeEngine engine(all.prefix(schedule[s]));
    parallel_for(queries.size(), [&](std::size_t q) { out[q][s] = engine(queries[q]); });
  }
  return out;
}

std::vector<GaugeResult> gauge_profile(const Vector& x, const ShapeFunction& phi,
                                       const GaussianSpace& space,
                                       const std::vector<std::size_t>& schedule,
                                       std::uint64_t seed) {
  return gauge_profile(std::vector<Vector>{x}, phi, space, schedule, seed).front();
}

nlohmann::json to_json(const SandwichReport& r) {
  return {{"holder", r.holder},
          {"gauge", finite_or_null(r.gauge)},
          {"gap", finite_or_null(r.gap)},
          {"lower_holds", r.lower_holds},
          {"status", to_string(r.status)}};
}

SandwichReport sandwich_check(const GridFunction& x, double alpha, const GaugeEngine& engine) {
  SandwichReport report;
  report.holder = holder_norm(x, alpha);
  const GaugeResult g = engine(x.values());
  report.gauge = g.value;
  report.status = g.status;
  report.gap = g.value - report.holder;
  report.lower_holds = report.holder <= g.value + kGaugeTolerance;
  return report;
}

AtomSet enlarge_atoms(const AtomSet& atoms, const std::vector<Vector>& extra,
                      const GaussianSpace& space) {
  if (extra.empty()) return atoms;
  std::vector<Vector> kept;
  for (const auto& y : extra) {
    if (y.size() != atoms.ambient_dim()) throw std::invalid_argument("extra point has the wrong dimension");
    if ((y.array() == 0.0).all()) continue;
    if (space.metric(y) <= 1.0) {
      kept.push_back(y);
      continue;
    }
    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
      const double mid = 0.5 * (lo + hi);
      (space.metric(mid * y) <= 1.0 ? lo : hi) = mid;
    }
    kept.push_back(lo * y);
  }
  Eigen::MatrixXd g(atoms.ambient_dim(), atoms.generators().cols() + static_cast<Eigen::Index>(kept.size()));
  g.leftCols(atoms.generators().cols()) = atoms.generators();
  for (std::size_t i = 0; i < kept.size(); ++i) g.col(atoms.generators().cols() + static_cast<Eigen::Index>(i)) = kept[i];
  nlohmann::json provenance = atoms.provenance();
  provenance["enlarged_by"].push_back(kept.size());
  return AtomSet(std::move(g), std::move(provenance));
}

AtomSet full_measure_enlargement(const AtomSet& atoms, const GaussianSpace& space, std::size_t m,
                                 std::uint64_t seed) {
  if (m == 0) return atoms;
  std::vector<Vector> accepted;
  std::size_t attempts = 0;
  while (accepted.size() < m) {
    Vector y = space.sample_measure(derive_seed(seed, attempts++));
    if (space.metric(y) <= 1.0) accepted.push_back(std::move(y));
    if (attempts >= 1000 && static_cast<double>(accepted.size()) < 1e-3 * static_cast<double>(attempts)) {
      throw std::runtime_error("measure samples almost never land in the metric unit ball");
    }
  }
  AtomSet out = enlarge_atoms(atoms, accepted, space);
  nlohmann::json provenance = out.provenance();
  provenance["measure_samples"] = {{"seed", seed}, {"accepted", m}, {"attempts", attempts}};
  return AtomSet(out.generators(), std::move(provenance));
}

nlohmann::json to_json(const LscReport& r) {
  nlohmann::json values = nlohmann::json::array();
  for (double v : r.sequence_values) values.push_back(finite_or_null(v));
  return {{"limit_value", finite_or_null(r.limit_value)},
          {"tail_min", finite_or_null(r.tail_min)},
          {"sequence_values", std::move(values)},
          {"violation", r.violation}};
}

LscReport lsc_probe(const std::vector<Vector>& sequence, const Vector& limit, const GaugeEngine& engine) {
  if (sequence.empty()) throw std::invalid_argument("lsc_probe needs a nonempty sequence");
  LscReport report;
  report.sequence_values.resize(sequence.size());
  parallel_for(sequence.size(), [&](std::size_t i) { report.sequence_values[i] = engine(sequence[i]).value; });
  report.limit_value = engine(limit).value;
  for (std::size_t i = sequence.size() / 2; i < sequence.size(); ++i) {
    report.tail_min = std::min(report.tail_min, report.sequence_values[i]);
  }
  report.violation = report.limit_value > report.tail_min + 0.05;
  return report;
}

NormFunction gauge_norm_function(std::shared_ptr<const GaugeEngine> engine) {
  nlohmann::json params = {{"generators", engine->atoms().generator_count()}, {"rank", engine->rank()}};
  return {"gauge", std::move(params),
          [engine](const GaussianSpace&, const Vector& x) { return (*engine)(x).value; }};
}

}  // namespace shapelab
