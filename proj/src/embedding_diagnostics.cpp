#include "shapelab/embedding_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "shapelab/parallel.hpp"
#include "shapelab/rng.hpp"

namespace shapelab {

namespace {

void require_increasing(const std::vector<int>& levels) {
  if (levels.size() < 2 || !std::is_sorted(levels.begin(), levels.end()) ||
      std::adjacent_find(levels.begin(), levels.end()) != levels.end()) {
    throw std::invalid_argument("levels must be strictly increasing (at least two)");
  }
}

int level_of(const Vector& x) {
  const Eigen::Index cells = x.size() - 1;
  if (cells < 2 || (cells & (cells - 1)) != 0) {
    throw std::invalid_argument("Hölder distance needs grid vectors of size 2^level + 1");
  }
  return static_cast<int>(std::lround(std::log2(static_cast<double>(cells))));
}

// Paths on levels[0], refined by Brownian bridges up to each later level.
std::vector<std::vector<GridFunction>> refined_paths(const std::vector<int>& levels, std::size_t samples,
                                                     std::uint64_t seed) {
  std::vector<std::vector<GridFunction>> paths(samples);
  parallel_for(samples, [&](std::size_t i) {
    const std::uint64_t path_seed = derive_seed(seed, i);
    GridFunction f = sample_wiener({levels.front(), path_seed});
    paths[i].push_back(f);
    for (std::size_t k = 1; k < levels.size(); ++k) {
      while (f.level() < levels[k]) {
        f = bridge_refine(f, derive_seed(path_seed, static_cast<std::uint64_t>(f.level())));
      }
      paths[i].push_back(f);
    }
  });
  return paths;
}

std::vector<double> step_ratios(const std::vector<double>& medians) {
  std::vector<double> out;
  for (std::size_t k = 1; k < medians.size(); ++k) out.push_back(medians[k] / medians[k - 1]);
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// ---------------------------------------------------------------------------

NetMetric sup_net_metric() {
  return {"sup", [](const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }};
}

NetMetric frechet_net_metric(SequenceMetric metric) {
  return {"frechet_seq", [metric = std::move(metric)](const Vector& a, const Vector& b) {
            return metric.distance(a, b);
          }};
}

NetMetric holder_net_metric(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("Hölder exponent must lie in (0, 1)");
  return {"holder:" + std::to_string(alpha), [alpha](const Vector& a, const Vector& b) {
            const Vector diff = a - b;
            return holder_norm(GridFunction(level_of(diff), diff - Vector::Constant(diff.size(), diff[0])), alpha);
          }};
}

NetMetric parse_net_metric(const std::string& id, Eigen::Index dim) {
  if (id == "sup") return sup_net_metric();
  if (id == "frechet_seq") {
    const Vector w = default_weights(dim);
    return frechet_net_metric(SequenceMetric{w, calibrate_metric_scale(Vector::Ones(dim), w)});
  }
  if (id.rfind("holder:", 0) == 0) return holder_net_metric(std::stod(id.substr(7)));
  throw std::invalid_argument("unknown net metric: " + id);
}

nlohmann::json to_json(const CoveringReport& r) {
  return {{"epsilon", r.epsilon},     {"metric", r.metric},
          {"net_size", r.net_size},   {"sample_count", r.sample_count},
          {"half_net_size", r.half_net_size}, {"saturated", r.saturated}};
}

CoveringReport greedy_net(const std::vector<Vector>& points, double epsilon, const NetMetric& metric,
                          double saturation_tol) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("net radius must be positive");
  CoveringReport report;
  report.epsilon = epsilon;
  report.metric = metric.name;
  report.sample_count = points.size();
  const std::size_t half = points.size() / 2;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == half) report.half_net_size = report.centers.size();
    bool covered = false;
    for (std::size_t c : report.centers) {
      if (metric.distance(points[c], points[i]) <= epsilon) {
        covered = true;
        break;
      }
    }
    if (!covered) report.centers.push_back(i);
  }
  report.net_size = report.centers.size();
  if (points.size() < 2) report.half_net_size = report.net_size;
  report.saturated = static_cast<double>(report.net_size) <
                     (1.0 + saturation_tol) * static_cast<double>(report.half_net_size);
  return report;
}

bool verify_cover(const std::vector<Vector>& points, const CoveringReport& report, const NetMetric& metric) {
  std::vector<char> ok(points.size(), 0);
  parallel_for(points.size(), [&](std::size_t i) {
    for (std::size_t c : report.centers) {
      if (metric.distance(points[c], points[i]) <= report.epsilon) {
        ok[i] = 1;
        return;
      }
    }
  });
  return std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
}

Vector sample_ball_H(const GaussianSpace& space, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 0x6a11));
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(space.strata()));
  return radius * sample_sphere_H(space, seed).point;
}

namespace {

NetMetric space_metric(const GaussianSpace& space) {
  return {space.kind() == "wiener" ? "sup" : "frechet_seq",
          [&space](const Vector& a, const Vector& b) { return space.distance(a, b); }};
}

std::vector<CoveringReport> profile(const std::vector<Vector>& points, const GaussianSpace& space,
                                    const std::vector<double>& eps_list) {
  const NetMetric metric = space_metric(space);
  std::vector<CoveringReport> out;
  for (double eps : eps_list) out.push_back(greedy_net(points, eps, metric));
  return out;
}

}  // namespace

std::vector<CoveringReport> compactness_profile(const ShapeFunction& phi, const GaussianSpace& space,
                                                const std::vector<double>& eps_list,
                                                std::size_t samples, std::uint64_t seed) {
  std::vector<Vector> points(samples);
  parallel_for(samples, [&](std::size_t i) {
    points[i] = eval_shape(phi, space, sample_sphere_H(space, derive_seed(seed, i)));
  });
  return profile(points, space, eps_list);
}

std::vector<CoveringReport> ball_covering_profile(const GaussianSpace& space,
                                                  const std::vector<double>& eps_list,
                                                  std::size_t samples, std::uint64_t seed) {
  std::vector<Vector> points(samples);
  parallel_for(samples, [&](std::size_t i) { points[i] = sample_ball_H(space, derive_seed(seed, i)); });
  return profile(points, space, eps_list);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const FullMeasureReport& r) {
  nlohmann::json cdf = nlohmann::json::array();
  for (const auto& e : r.cdf) {
    cdf.push_back({{"r", e.radius}, {"p_hat", e.p_hat}, {"stderr", e.stderr_}, {"N", e.samples}, {"model", e.model}});
  }
  return {{"alpha", r.alpha},       {"level", r.level},
          {"cdf", std::move(cdf)},  {"crossing_radius", r.crossing_radius},
          {"monotone", r.monotone}, {"pass", r.pass}};
}

void write_cdf_csv(std::ostream& os, const FullMeasureReport& report) {
  os << "r,p_hat,stderr\n" << std::setprecision(17);
  for (const auto& e : report.cdf) os << e.radius << ',' << e.p_hat << ',' << e.stderr_ << '\n';
}

FullMeasureReport full_measure_mc(double alpha, const std::vector<double>& r_list, std::size_t samples,
                                  int level, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("Hölder exponent must lie in (0, 1)");
  if (samples == 0) throw std::invalid_argument("full_measure_mc needs samples");
  std::vector<double> norms(samples);
  parallel_for(samples, [&](std::size_t i) {
    norms[i] = holder_norm(sample_wiener({level, derive_seed(seed, i)}), alpha);
  });
  std::sort(norms.begin(), norms.end());

  FullMeasureReport report;
  report.alpha = alpha;
  report.level = level;
  const std::string model = "wiener(level=" + std::to_string(level) + ")";
  const double n = static_cast<double>(samples);
  for (double r : r_list) {
    const auto count = std::upper_bound(norms.begin(), norms.end(), r) - norms.begin();
    const double p = static_cast<double>(count) / n;
    report.cdf.push_back({r, p, std::sqrt(p * (1.0 - p) / n), samples, model});
  }
  report.monotone = true;
  for (std::size_t k = 0; k < report.cdf.size(); ++k) {
    if (k > 0 && report.cdf[k].radius >= report.cdf[k - 1].radius) {
      report.monotone = report.monotone && report.cdf[k].p_hat >= report.cdf[k - 1].p_hat;
    }
    if (report.crossing_radius < 0.0 && report.cdf[k].p_hat >= 0.99) {
      report.crossing_radius = report.cdf[k].radius;
    }
  }
  report.pass = report.monotone && report.crossing_radius >= 0.0;
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const DichotomyReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"alpha", row.alpha}, {"medians", row.medians}, {"ratios", row.ratios},
                    {"regime", row.regime}, {"pass", row.pass}});
  }
  return {{"levels", r.levels}, {"N", r.samples}, {"rows", std::move(rows)}, {"pass", r.pass}};
}

DichotomyReport dichotomy_sweep(const std::vector<double>& alphas, const std::vector<int>& levels,
                                std::size_t samples, std::uint64_t seed, const DichotomyConfig& config) {
  require_increasing(levels);
  const auto paths = refined_paths(levels, samples, seed);
  DichotomyReport report;
  report.levels = levels;
  report.samples = samples;
  report.pass = true;
  for (double alpha : alphas) {
    DichotomyRow row;
    row.alpha = alpha;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      std::vector<double> norms(samples);
      parallel_for(samples, [&](std::size_t i) { norms[i] = holder_norm(paths[i][k], alpha); });
      row.medians.push_back(median(std::move(norms)));
    }
    row.ratios = step_ratios(row.medians);
    row.pass = true;
    if (alpha <= 0.4) {
      row.regime = "stable";
      for (double r : row.ratios) row.pass = row.pass && std::abs(r - 1.0) <= config.stable_tol;
    } else if (alpha >= 0.6) {
      row.regime = "divergent";
      for (std::size_t k = 0; k < row.ratios.size(); ++k) {
        const int gap = levels[k + 1] - levels[k];
        const double floor = std::pow(2.0, (alpha - 0.5) * gap) * config.divergent_factor;
        row.pass = row.pass && row.ratios[k] >= floor;
      }
    } else {
      row.regime = "none";
    }
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<double> line_holder_medians(double alpha, const std::vector<int>& levels) {
  std::vector<double> out;
  for (int level : levels) {
    out.push_back(holder_norm(GridFunction::sample(level, [](double t) { return t; }), alpha));
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const CsReport& r) {
  return {{"N", r.samples},
          {"max_ratio", r.max_ratio},
          {"violations", r.violations},
          {"precondition_failures", r.precondition_failures},
          {"max_ratio_unnormalized", r.max_ratio_unnormalized},
          {"pass", r.pass}};
}

CsReport cs_bound_check(const std::vector<GridFunction>& paths) {
  std::vector<double> ratio(paths.size()), energy(paths.size());
  parallel_for(paths.size(), [&](std::size_t i) {
    energy[i] = h12_norm(paths[i]);
    ratio[i] = holder_norm(paths[i], 0.5, HolderScan::kExact);
  });
  CsReport report;
  report.samples = paths.size();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (std::abs(energy[i] - 1.0) > 1e-9) {
      ++report.precondition_failures;
      report.max_ratio_unnormalized = std::max(report.max_ratio_unnormalized, ratio[i]);
      continue;
    }
    report.max_ratio = std::max(report.max_ratio, ratio[i]);
    if (ratio[i] > 1.0 + 1e-9) ++report.violations;
  }
  report.pass = report.violations == 0 && report.precondition_failures == 0;
  return report;
}

CsReport cs_bound_check(std::size_t samples, int level, std::uint64_t seed) {
  std::vector<GridFunction> paths(samples);
  parallel_for(samples, [&](std::size_t i) {
    GridFunction f = sample_kl(kDefaultKlModes, level, derive_seed(seed, i));
    f *= 1.0 / h12_norm(f);
    paths[i] = std::move(f);
  });
  return cs_bound_check(paths);
}

GridFunction unit_band_path(int level, int first_mode, int modes, std::uint64_t seed) {
  if (first_mode < 1 || modes < 1) throw std::invalid_argument("band modes must be positive");
  CounterRng rng(seed);
  Vector xi(modes);
  for (auto& v : xi) v = rng.normal();
  GridFunction f = GridFunction::sample(level, [&](double t) {
    double sum = 0.0;
    for (int j = 0; j < modes; ++j) sum += xi[j] * kl_basis(first_mode + j, t);
    return sum;
  });
  f *= 1.0 / h12_norm(f);
  return f;
}

nlohmann::json to_json(const SmallBallReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"epsilon", row.epsilon}, {"bound", row.bound}, {"filtered", row.filtered},
                    {"max_holder", row.max_holder}, {"sharpest", row.sharpest},
                    {"violations", row.violations}});
  }
  return {{"alpha", r.alpha}, {"level", r.level}, {"N", r.samples}, {"rows", std::move(rows)}, {"pass", r.pass}};
}

SmallBallReport small_ball_holder_bound(const std::vector<double>& eps_list, double alpha,
                                        std::size_t samples, int level, std::uint64_t seed,
                                        int min_band, int max_band) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("small-ball bound needs alpha in (0, 1/2)");
  if (min_band < 1 || max_band <= min_band) throw std::invalid_argument("bad KL band range");
  std::vector<double> sup(samples), holder(samples);
  parallel_for(samples, [&](std::size_t i) {
    const std::uint64_t path_seed = derive_seed(seed, i);
    CounterRng rng(derive_seed(path_seed, 0xba4d));
    const int span = max_band - min_band;
    const int first = min_band + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(span));
    const GridFunction f = unit_band_path(level, first, kDefaultKlModes, path_seed);
    sup[i] = sup_norm(f);
    holder[i] = holder_norm(f, alpha);
  });
  SmallBallReport report;
  report.alpha = alpha;
  report.level = level;
  report.samples = samples;
  report.pass = true;
  for (double eps : eps_list) {
    SmallBallRow row;
    row.epsilon = eps;
    row.bound = std::pow(2.0 * eps, 1.0 - 2.0 * alpha);
    for (std::size_t i = 0; i < samples; ++i) {
      if (!(sup[i] < eps)) continue;
      ++row.filtered;
      row.max_holder = std::max(row.max_holder, holder[i]);
      if (holder[i] > row.bound + 1e-9) ++row.violations;
    }
    row.sharpest = row.max_holder / row.bound;
    report.pass = report.pass && row.filtered > 0 && row.violations == 0;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const WitnessReport& r) {
  return {{"levels", r.levels},
          {"N", r.samples},
          {"h12_medians", r.h12_medians},
          {"h12_ratios", r.h12_ratios},
          {"line_h12", r.line_h12},
          {"alpha_medians", r.alpha_medians},
          {"alpha_ratios", r.alpha_ratios},
          {"alpha_prime_medians", r.alpha_prime_medians},
          {"alpha_prime_ratios", r.alpha_prime_ratios},
          {"h12_pass", r.h12_pass},
          {"line_pass", r.line_pass},
          {"chain_pass", r.chain_pass},
          {"pass", r.pass}};
}

WitnessReport containment_witnesses(const std::vector<int>& levels, std::size_t samples, std::uint64_t seed,
                                    const WitnessConfig& config) {
  require_increasing(levels);
  const auto paths = refined_paths(levels, samples, seed);
  WitnessReport report;
  report.levels = levels;
  report.samples = samples;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    std::vector<double> h12(samples), a(samples), ap(samples);
    parallel_for(samples, [&](std::size_t i) {
      h12[i] = h12_norm(paths[i][k]);
      a[i] = holder_norm(paths[i][k], config.alpha);
      ap[i] = holder_norm(paths[i][k], config.alpha_prime);
    });
    report.h12_medians.push_back(median(std::move(h12)));
    report.alpha_medians.push_back(median(std::move(a)));
    report.alpha_prime_medians.push_back(median(std::move(ap)));
    report.line_h12.push_back(h12_norm(GridFunction::sample(levels[k], [](double t) { return t; })));
  }
  report.h12_ratios = step_ratios(report.h12_medians);
  report.alpha_ratios = step_ratios(report.alpha_medians);
  report.alpha_prime_ratios = step_ratios(report.alpha_prime_medians);

  auto within = [&](double value, double target) { return std::abs(value / target - 1.0) <= config.tolerance; };
  report.h12_pass = report.chain_pass = true;
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    const int gap = levels[k + 1] - levels[k];
    report.h12_pass = report.h12_pass && within(report.h12_ratios[k], std::pow(2.0, 0.5 * gap));
    report.chain_pass = report.chain_pass && within(report.alpha_ratios[k], 1.0) &&
                        within(report.alpha_prime_ratios[k], std::pow(2.0, (config.alpha_prime - 0.5) * gap));
  }
  report.line_pass = std::all_of(report.line_h12.begin(), report.line_h12.end(),
                                 [](double v) { return std::abs(v - 1.0) <= 1e-12; });
  report.pass = report.h12_pass && report.line_pass && report.chain_pass;
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const SmallHolderReport& r) {
  return {{"alpha", r.alpha},          {"level", r.level},
          {"N", r.samples},            {"deltas", r.deltas},
          {"median_defects", r.median_defects}, {"full_defect", r.full_defect},
          {"ratio", r.ratio},          {"decreasing", r.decreasing},
          {"pass", r.pass}};
}

SmallHolderReport small_holder_membership(double alpha, const std::vector<double>& deltas,
                                          std::size_t samples, int level, std::uint64_t seed,
                                          double ratio_threshold) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("Hölder exponent must lie in (0, 1)");
  if (deltas.empty()) throw std::invalid_argument("small_holder_membership needs deltas");
  const double spacing = std::ldexp(1.0, -level);
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (deltas[k] < spacing) throw std::invalid_argument("delta below the grid resolution");
    if (deltas[k] > 1.0 || (k > 0 && deltas[k] >= deltas[k - 1])) {
      throw std::invalid_argument("deltas must decrease within (0, 1]");
    }
  }
  std::vector<std::vector<double>> defects(deltas.size() + 1, std::vector<double>(samples));
  parallel_for(samples, [&](std::size_t i) {
    const GridFunction w = sample_wiener({level, derive_seed(seed, i)});
    defects[0][i] = holder_norm(w, alpha);
    for (std::size_t k = 0; k < deltas.size(); ++k) defects[k + 1][i] = small_holder_defect(w, alpha, deltas[k]);
  });
  SmallHolderReport report;
  report.alpha = alpha;
  report.level = level;
  report.samples = samples;
  report.deltas = deltas;
  report.full_defect = median(defects[0]);
  report.decreasing = true;
  double previous = report.full_defect;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double m = median(defects[k + 1]);
    report.median_defects.push_back(m);
    report.decreasing = report.decreasing && m <= previous;
    previous = m;
  }
  report.ratio = report.median_defects.back() / report.full_defect;
  report.pass = report.decreasing && report.ratio < ratio_threshold;
  return report;
}

}  // namespace shapelab
