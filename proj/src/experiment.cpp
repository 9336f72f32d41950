#include "shapelab/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>

#include "shapelab/embedding_diagnostics.hpp"
#include "shapelab/gaussian_models.hpp"
#include "shapelab/generated_space.hpp"
#include "shapelab/parallel.hpp"
#include "shapelab/rng.hpp"
#include "shapelab/shape_functions.hpp"

namespace shapelab {

using nlohmann::json;

namespace {


struct CheckContext {
  const ExperimentConfig& config;
  const CheckSpec& check;
  std::uint64_t seed;
  std::unique_ptr<GaussianSpace> space;
  const json& p;

  double tol(const char* key) const { return config.tolerances.at(key).get<double>(); }
  ShapeFunction shape() const {
    return parse_shape(p.contains("shape") ? p["shape"].get<std::string>() : config.shape);
  }
};

using Runner = std::function<CheckOutput(const CheckContext&)>;

struct CheckType {
  std::string description;
  json defaults;
  bool uses_shape = false;
  Runner run;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <typename T>
std::vector<T> list(const json& p, const char* key) {
  return p.at(key).get<std::vector<T>>();
}

std::vector<Vector> sphere_queries(const GaussianSpace& space, std::size_t n, std::uint64_t seed) {
  std::vector<Vector> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = sample_sphere_H(space, derive_seed(seed, i)).point; });
  return out;
}

std::vector<GaugeResult> solve_all(const GaugeEngine& engine, const std::vector<Vector>& queries) {
  std::vector<GaugeResult> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) { out[i] = engine(queries[i]); });
  return out;
}

const WienerSpace& require_wiener(const CheckContext& c) {
  const auto* w = dynamic_cast<const WienerSpace*>(c.space.get());
  if (w == nullptr) throw std::invalid_argument(c.check.type + " needs a wiener model");
  return *w;
}

// ---------------------------------------------------------------------------

CheckOutput run_sample(const CheckContext& c) {
  const auto n = c.p["count"].get<std::size_t>();
  std::ostringstream os;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = c.space->sample_measure(derive_seed(c.seed, i));
    for (Eigen::Index k = 0; k < x.size(); ++k) os << (k ? "," : "") << fmt(x[k]);
    os << '\n';
  }
  CheckOutput out;
  out.pass = true;
  out.summary = {{"count", n}, {"dim", c.space->dim()}};
  out.files.emplace_back(c.check.id + ".csv", os.str());
  return out;
}

CheckOutput run_verify_shape(const CheckContext& c) {
  const auto phi = c.shape();
  const auto schedule = default_schedule(phi, *c.space);
  const auto reports = check_all(phi, *c.space, schedule, c.p["samples"].get<std::size_t>(), c.seed);
  const auto expect_fail = list<std::string>(c.p, "expect_fail");
  CheckOutput out;
  out.pass = true;
  json props = json::object(), full = json::array();
  for (const auto& r : reports) {
    const std::string name = to_string(r.property);
    const bool expected_pass = std::find(expect_fail.begin(), expect_fail.end(), name) == expect_fail.end();
    props[name] = r.pass;
    out.pass = out.pass && r.pass == expected_pass;
    full.push_back(to_json(r));
  }
  out.summary = {{"shape", phi.name}, {"params", phi.params}, {"properties", props}, {"expect_fail", expect_fail}};
  out.files.emplace_back(c.check.id + ".json",
                         dump({{"shape", phi.name}, {"params", phi.params}, {"space", c.space->describe()},
                               {"reports", full}}));
  return out;
}

CheckOutput run_build_atoms(const CheckContext& c) {
  const auto atoms = build_atoms(c.shape(), *c.space, c.p["count"].get<std::size_t>(), c.seed);
  std::ostringstream csv;
  write_atoms_csv(csv, atoms);
  CheckOutput out;
  out.pass = true;
  out.summary = {{"generators", atoms.generator_count()}, {"atoms", atoms.size()},
                 {"max_metric", atoms.max_metric(*c.space)}};
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  out.files.emplace_back(c.check.id + ".provenance.json", dump(atoms.provenance()));
  return out;
}

CheckOutput run_gauge_oracle(const CheckContext& c) {
  const int dim = c.p["dim"].get<int>();
  const int max_gen = c.p["max_generators"].get<int>();
  const auto n = c.p["queries"].get<std::size_t>();
  if (dim < 1 || max_gen < 1 || 2 * max_gen > 16) throw std::invalid_argument("gauge-oracle sizes out of range");
  const double tol = c.tol("gauge");
  std::ostringstream csv;
  csv << "query,generators,lp,oracle,status\n";
  std::size_t infeasible = 0, mismatches = 0;
  double max_error = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    CounterRng rng(derive_seed(c.seed, q));
    const int m = 1 + static_cast<int>(q % static_cast<std::size_t>(max_gen));
    Eigen::MatrixXd g(dim, m);
    for (auto& v : g.reshaped()) v = rng.normal();
    const AtomSet atoms(g, {});
    Vector x(dim);
    if (q % 3 == 0) {
      for (auto& v : x) v = rng.normal();
    } else {
      Vector coef(m);
      for (auto& v : coef) v = rng.normal();
      x = g * coef;
    }
    const auto lp = gauge(x, atoms);
    const double oracle = vertex_enumeration_gauge(x, atoms);
    bool ok;
    if (std::isinf(oracle)) {
      ++infeasible;
      ok = std::isinf(lp.value) && lp.status == GaugeStatus::kInfeasible;
    } else {
      const double err = std::abs(lp.value - oracle);
      max_error = std::max(max_error, err);
      ok = lp.status == GaugeStatus::kOptimal && err <= tol;
    }
    if (!ok) ++mismatches;
    csv << q << ',' << m << ',' << fmt(lp.value) << ',' << fmt(oracle) << ',' << to_string(lp.status) << '\n';
  }
  CheckOutput out;
  out.pass = mismatches == 0 && infeasible > 0;
  out.summary = {{"queries", n}, {"infeasible", infeasible}, {"mismatches", mismatches}, {"max_error", max_error}};
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  return out;
}

CheckOutput run_gauge_laws(const CheckContext& c) {
  const GaugeEngine engine(build_atoms(c.shape(), *c.space, c.p["count"].get<std::size_t>(), c.seed));
  const auto n = c.p["pairs"].get<std::size_t>();
  const auto xs = sphere_queries(*c.space, n, derive_seed(c.seed, 1));
  const auto ys = sphere_queries(*c.space, n, derive_seed(c.seed, 2));
  std::vector<double> scalars(n);
  CounterRng rng(derive_seed(c.seed, 3));
  for (auto& s : scalars) s = 6.0 * rng.uniform() - 3.0;

  struct Row { double gx, gy, gs, gsum; bool optimal; };
  std::vector<Row> rows(n);
  parallel_for(n, [&](std::size_t i) {
    const auto gx = engine(xs[i]), gy = engine(ys[i]), gs = engine(scalars[i] * xs[i]),
               gsum = engine(xs[i] + ys[i]);
    rows[i] = {gx.value, gy.value, gs.value, gsum.value,
               gx.status == GaugeStatus::kOptimal && gy.status == GaugeStatus::kOptimal &&
                   gs.status == GaugeStatus::kOptimal && gsum.status == GaugeStatus::kOptimal};
  });
  const double tol = c.tol("gauge");
  std::size_t homogeneity = 0, triangle = 0, nonoptimal = 0;
  double worst_h = 0.0, worst_t = 0.0;
  std::ostringstream csv;
  csv << "pair,scalar,gauge_x,gauge_y,gauge_scaled,gauge_sum\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    if (!r.optimal) ++nonoptimal;
    const double h = std::abs(r.gs - std::abs(scalars[i]) * r.gx) / std::max(1.0, r.gx);
    const double t = (r.gsum - r.gx - r.gy) / std::max(1.0, r.gx + r.gy);
    worst_h = std::max(worst_h, h);
    worst_t = std::max(worst_t, t);
    if (!(h <= tol)) ++homogeneity;
    if (!(t <= tol)) ++triangle;
    csv << i << ',' << fmt(scalars[i]) << ',' << fmt(r.gx) << ',' << fmt(r.gy) << ',' << fmt(r.gs) << ','
        << fmt(r.gsum) << '\n';
  }
  CheckOutput out;
  out.pass = homogeneity == 0 && triangle == 0 && nonoptimal == 0;
  out.summary = {{"pairs", n}, {"homogeneity_violations", homogeneity}, {"triangle_violations", triangle},
                 {"nonoptimal", nonoptimal}, {"max_homogeneity_error", worst_h}, {"max_triangle_excess", worst_t}};
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  return out;
}

CheckOutput run_gauge_profile(const CheckContext& c) {
  const auto schedule = list<std::size_t>(c.p, "schedule");
  const auto queries = sphere_queries(*c.space, c.p["queries"].get<std::size_t>(), derive_seed(c.seed, 1));
  const auto profile = gauge_profile(queries, c.shape(), *c.space, schedule, c.seed);
  const double tol = c.tol("gauge");
  std::size_t violations = 0;
  std::ostringstream csv;
  csv << "query";
  for (auto m : schedule) csv << ",m" << m;
  csv << '\n';
  for (std::size_t q = 0; q < profile.size(); ++q) {
    csv << q;
    for (std::size_t k = 0; k < profile[q].size(); ++k) {
      csv << ',' << fmt(profile[q][k].value);
      if (k > 0 && profile[q][k].value > profile[q][k - 1].value + tol * std::max(1.0, profile[q][k - 1].value)) {
        ++violations;
      }
    }
    csv << '\n';
  }
  CheckOutput out;
  out.pass = violations == 0;
  out.summary = {{"schedule", schedule}, {"queries", queries.size()}, {"violations", violations}};
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  return out;
}

CheckOutput run_enlargement(const CheckContext& c) {
  const auto atoms = build_atoms(c.shape(), *c.space, c.p["count"].get<std::size_t>(), c.seed);
  std::vector<Vector> extra(c.p["extra"].get<std::size_t>());
  for (std::size_t i = 0; i < extra.size(); ++i) extra[i] = c.space->sample_measure(derive_seed(c.seed, 100 + i));
  const GaugeEngine before(atoms), after(enlarge_atoms(atoms, extra, *c.space));
  const auto queries = sphere_queries(*c.space, c.p["queries"].get<std::size_t>(), derive_seed(c.seed, 1));
  const auto g0 = solve_all(before, queries), g1 = solve_all(after, queries);
  const double tol = c.tol("gauge");
  std::size_t violations = 0;
  std::ostringstream csv;
  csv << "query,before,after\n";
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (g1[q].value > g0[q].value + tol * std::max(1.0, std::isfinite(g0[q].value) ? g0[q].value : 1.0)) ++violations;
    csv << q << ',' << fmt(g0[q].value) << ',' << fmt(g1[q].value) << '\n';
  }
  CheckOutput out;
  out.pass = violations == 0;
  out.summary = {{"queries", queries.size()}, {"added", extra.size()}, {"violations", violations}};
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  return out;
}

CheckOutput run_sandwich(const CheckContext& c) {
  const auto& wiener = require_wiener(c);
  const double alpha = c.p["alpha"].get<double>();
  const auto counts = list<std::size_t>(c.p, "counts");
  if (counts.empty() || !std::is_sorted(counts.begin(), counts.end())) {
    throw std::invalid_argument("sandwich counts must be nondecreasing");
  }
  auto queries = sphere_queries(wiener, c.p["queries"].get<std::size_t>(), derive_seed(c.seed, 1));
  for (auto& q : queries) q /= holder_norm(wiener.as_grid(q), alpha);
  const auto atoms = build_atoms(c.shape(), wiener, counts.back(), c.seed);

  std::vector<std::vector<SandwichReport>> table(counts.size());
  std::size_t lower_failures = 0;
  json medians = json::array();
  std::ostringstream csv;
  csv << "atoms,query,holder,gauge,gap,status\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const GaugeEngine engine(atoms.prefix(counts[k]));
    table[k].resize(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) { table[k][i] = sandwich_check(wiener.as_grid(queries[i]), alpha, engine); });
    std::vector<double> gaps;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto& r = table[k][i];
      if (std::isfinite(r.gauge) && !r.lower_holds) ++lower_failures;
      gaps.push_back(r.gap);
      csv << 2 * counts[k] << ',' << i << ',' << fmt(r.holder) << ',' << fmt(r.gauge) << ',' << fmt(r.gap) << ','
          << to_string(r.status) << '\n';
    }
    medians.push_back(median(gaps));
  }
  bool shrinking = true;
  for (std::size_t k = 1; k < medians.size(); ++k) {
    shrinking = shrinking && medians[k].get<double>() < medians[k - 1].get<double>();
  }
  CheckOutput out;
  out.pass = lower_failures == 0 && shrinking;
  out.summary = {{"generators", counts}, {"median_gap", medians}, {"lower_failures", lower_failures},
                 {"median_gap_decreasing", shrinking}};
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  return out;
}

CheckOutput run_full_measure(const CheckContext& c) {
  const auto report = full_measure_mc(c.p["alpha"].get<double>(), list<double>(c.p, "radii"),
                                      c.p["samples"].get<std::size_t>(), c.p["level"].get<int>(), c.seed);
  std::ostringstream csv;
  write_cdf_csv(csv, report);
  CheckOutput out;
  out.pass = report.pass;
  out.summary = {{"crossing_radius", report.crossing_radius}, {"monotone", report.monotone}};
  out.files.emplace_back(c.check.id + ".json", dump(to_json(report)));
  out.files.emplace_back(c.check.id + ".csv", csv.str());
  return out;
}

CheckOutput run_dichotomy(const CheckContext& c) {
  DichotomyConfig cfg;
  cfg.stable_tol = c.p["stable_tol"].get<double>();
  cfg.divergent_factor = c.p["divergent_factor"].get<double>();
  const auto report = dichotomy_sweep(list<double>(c.p, "alphas"), list<int>(c.p, "levels"),
                                      c.p["samples"].get<std::size_t>(), c.seed, cfg);
  CheckOutput out;
  out.pass = report.pass;
  json ratios = json::object();
  for (const auto& row : report.rows) ratios[fmt(row.alpha)] = row.ratios;
  out.summary = {{"ratios", ratios}};
  out.files.emplace_back(c.check.id + ".json", dump(to_json(report)));
  return out;
}

CheckOutput run_cs_bound(const CheckContext& c) {
  const auto report = cs_bound_check(c.p["samples"].get<std::size_t>(), c.p["level"].get<int>(), c.seed);
  CheckOutput out;
  out.pass = report.pass;
  out.summary = {{"max_ratio", report.max_ratio}, {"violations", report.violations}};
  out.files.emplace_back(c.check.id + ".json", dump(to_json(report)));
  return out;
}

CheckOutput run_small_ball(const CheckContext& c) {
  const auto min_filtered = c.p["min_filtered"].get<std::size_t>();
  CheckOutput out;
  out.pass = true;
  json reports = json::array(), rows = json::array();
  for (double alpha : list<double>(c.p, "alphas")) {
    const auto r = small_ball_holder_bound(list<double>(c.p, "eps"), alpha, c.p["samples"].get<std::size_t>(),
                                           c.p["level"].get<int>(), c.seed, c.p["min_band"].get<int>(),
                                           c.p["max_band"].get<int>());
    for (const auto& row : r.rows) {
      out.pass = out.pass && row.violations == 0 && row.filtered >= min_filtered;
      rows.push_back({{"alpha", alpha}, {"epsilon", row.epsilon}, {"filtered", row.filtered},
                      {"violations", row.violations}, {"sharpest", row.sharpest}});
    }
    reports.push_back(to_json(r));
  }
  out.summary = {{"rows", rows}};
  out.files.emplace_back(c.check.id + ".json", dump(reports));
  return out;
}

CheckOutput run_witnesses(const CheckContext& c) {
  WitnessConfig cfg;
  cfg.alpha = c.p["alpha"].get<double>();
  cfg.alpha_prime = c.p["alpha_prime"].get<double>();
  cfg.tolerance = c.p["tolerance"].get<double>();
  const auto report = containment_witnesses(list<int>(c.p, "levels"), c.p["samples"].get<std::size_t>(), c.seed, cfg);
  CheckOutput out;
  out.pass = report.pass;
  out.summary = {{"h12_ratios", report.h12_ratios}, {"line_h12", report.line_h12},
                 {"alpha_ratios", report.alpha_ratios}, {"alpha_prime_ratios", report.alpha_prime_ratios}};
  out.files.emplace_back(c.check.id + ".json", dump(to_json(report)));
  return out;
}

CheckOutput run_small_holder(const CheckContext& c) {
  const auto report = small_holder_membership(c.p["alpha"].get<double>(), list<double>(c.p, "deltas"),
                                              c.p["samples"].get<std::size_t>(), c.p["level"].get<int>(), c.seed,
                                              c.p["ratio_threshold"].get<double>());
  CheckOutput out;
  out.pass = report.pass;
  out.summary = {{"ratio", report.ratio}, {"decreasing", report.decreasing}};
  out.files.emplace_back(c.check.id + ".json", dump(to_json(report)));
  return out;
}

CheckOutput covering_output(const CheckContext& c, const std::vector<CoveringReport>& reports) {
  CheckOutput out;
  out.pass = true;
  json all = json::array(), nets = json::array();
  for (const auto& r : reports) {
    out.pass = out.pass && r.saturated;
    all.push_back(to_json(r));
    nets.push_back({{"epsilon", r.epsilon}, {"half", r.half_net_size}, {"full", r.net_size}, {"saturated", r.saturated}});
  }
  out.summary = {{"nets", nets}};
  out.files.emplace_back(c.check.id + ".json", dump(all));
  return out;
}

CheckOutput run_covering(const CheckContext& c) {
  return covering_output(c, ball_covering_profile(*c.space, list<double>(c.p, "eps"),
                                                  c.p["samples"].get<std::size_t>(), c.seed));
}

CheckOutput run_compactness(const CheckContext& c) {
  return covering_output(c, compactness_profile(c.shape(), *c.space, list<double>(c.p, "eps"),
                                                c.p["samples"].get<std::size_t>(), c.seed));
}

const std::map<std::string, CheckType>& registry() {
  static const std::map<std::string, CheckType> table = {
      {"sample", {"draws from the model's Gaussian measure as CSV rows", {{"count", 4}}, false, run_sample}},
      {"verify-shape",
       {"shape-function properties a, codomain, b, c, d", {{"samples", 1000}, {"expect_fail", json::array()}},
        true, run_verify_shape}},
      {"build-atoms", {"symmetric atoms phi(S^H) as CSV plus provenance", {{"count", 256}}, true, run_build_atoms}},
      {"gauge-oracle",
       {"LP gauge against vertex enumeration on random small problems",
        {{"queries", 100}, {"dim", 3}, {"max_generators", 4}}, false, run_gauge_oracle}},
      {"gauge-laws", {"homogeneity and triangle inequality of the gauge", {{"count", 512}, {"pairs", 100}}, true,
                      run_gauge_laws}},
      {"gauge-profile",
       {"gauge along nested atom prefixes", {{"schedule", {128, 256, 512, 1024}}, {"queries", 20}}, true,
        run_gauge_profile}},
      {"enlargement",
       {"gauge before and after adjoining measure draws", {{"count", 256}, {"extra", 256}, {"queries", 20}}, true,
        run_enlargement}},
      {"sandwich",
       {"Hölder norm below the gauge and the median gap across atom counts",
        {{"alpha", 0.25}, {"counts", {256, 4096}}, {"queries", 20}}, true, run_sandwich}},
      {"full-measure",
       {"empirical CDF of the Hölder norm of Wiener paths",
        {{"alpha", 0.25}, {"radii", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0}}, {"samples", 2000},
         {"level", 10}},
        false, run_full_measure}},
      {"dichotomy",
       {"median Hölder norms under bridge refinement",
        {{"alphas", {0.1, 0.25, 0.4, 0.6, 0.75}}, {"levels", {8, 9, 10}}, {"samples", 500}, {"stable_tol", 0.2},
         {"divergent_factor", 0.9}},
        false, run_dichotomy}},
      {"cs-bound", {"discrete Cauchy-Schwarz bound on unit-energy paths", {{"samples", 1000}, {"level", 10}}, false,
                    run_cs_bound}},
      {"small-ball",
       {"Hölder bound (2 eps)^(1 - 2 alpha) on small unit-energy paths",
        {{"eps", {0.005, 0.01}}, {"alphas", {0.2, 0.25}}, {"samples", 1000}, {"level", 10}, {"min_filtered", 50},
         {"min_band", 100}, {"max_band", 400}},
        false, run_small_ball}},
      {"witnesses",
       {"energy growth of Wiener paths and the Hölder chain",
        {{"levels", {8, 10}}, {"samples", 500}, {"alpha", 0.25}, {"alpha_prime", 0.6}, {"tolerance", 0.15}}, false,
        run_witnesses}},
      {"small-holder",
       {"decay of the small-Hölder defect",
        {{"alpha", 0.25}, {"deltas", {0.5, 0.25, 0.125, 0.0625, 0.03125}}, {"samples", 500}, {"level", 10},
         {"ratio_threshold", 0.5}},
        false, run_small_holder}},
      {"covering", {"greedy-net saturation of Cameron-Martin ball samples", {{"eps", {0.2, 0.1}}, {"samples", 4000}},
                    false, run_covering}},
      {"compactness", {"greedy-net saturation of phi(S^H) images", {{"eps", {0.2, 0.1}}, {"samples", 4000}}, true,
                       run_compactness}},
  };
  return table;
}

json default_model() { return {{"kind", "wiener"}, {"level", 8}, {"kl_modes", 64}}; }
json default_tolerances() { return {{"gauge", kGaugeTolerance}, {"exact", 1e-9}}; }

bool is_count(const json& value) {
  return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
}

// Integers are also numbers.
bool same_kind(const json& value, const json& reference) {
  if (reference.is_number_integer()) return is_count(value);
  if (reference.is_number()) return value.is_number();
  if (reference.is_array()) {
    if (!value.is_array()) return false;
    if (reference.empty()) return true;
    return std::all_of(value.begin(), value.end(), [&](const json& v) { return same_kind(v, reference.front()); });
  }
  return value.type() == reference.type();
}

std::string kind_name(const json& reference) {
  if (reference.is_number_integer()) return "non-negative integer";
  if (reference.is_number()) return "number";
  if (reference.is_array()) {
    if (reference.empty()) return "array of strings";
    return "array of " + kind_name(reference.front()) + "s";
  }
  return reference.type_name();
}

bool valid_id(const std::string& s) {
  static const std::regex pattern("[A-Za-z0-9_.-]+");
  return std::regex_match(s, pattern);
}

void validate_model(const json& model, const std::string& where, std::vector<std::string>& issues) {
  if (!model.is_object()) {
    issues.push_back(where + ": expected object");
    return;
  }
  try {
    make_space(model);
  } catch (const std::exception& e) {
    issues.push_back(where + ": " + e.what());
  }
}

void validate_shape(const json& shape, const std::string& where, std::vector<std::string>& issues) {
  if (!shape.is_string()) {
    issues.push_back(where + ": expected string");
    return;
  }
  try {
    parse_shape(shape.get<std::string>());
  } catch (const std::exception& e) {
    issues.push_back(where + ": " + e.what());
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json to_json(const ArtifactRecord& a) { return {{"path", a.path}, {"sha256", a.sha256}}; }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error([&] {
        std::string msg = "invalid config:";
        for (const auto& i : issues) msg += "\n  - " + i;
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::vector<std::string> validate_config(const json& doc) {
  std::vector<std::string> issues;
  if (!doc.is_object()) return {"document: expected object"};
  static const std::vector<std::string> top = {"id", "seed", "model", "shape", "tolerances", "output_dir", "checks"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(top.begin(), top.end(), key) == top.end()) issues.push_back(key + ": unknown field");
  }
  if (!doc.contains("id")) {
    issues.push_back("id: required");
  } else if (!doc["id"].is_string() || !valid_id(doc["id"].get<std::string>())) {
    issues.push_back("id: expected non-empty string of [A-Za-z0-9_.-]");
  }
  if (!doc.contains("seed")) {
    issues.push_back("seed: required");
  } else if (!is_count(doc["seed"])) {
    issues.push_back("seed: expected unsigned 64-bit integer");
  }
  if (doc.contains("model")) validate_model(doc["model"], "model", issues);
  if (doc.contains("shape")) validate_shape(doc["shape"], "shape", issues);
  if (doc.contains("output_dir") && !doc["output_dir"].is_string()) issues.push_back("output_dir: expected string");
  if (doc.contains("tolerances")) {
    const auto& t = doc["tolerances"];
    if (!t.is_object()) {
      issues.push_back("tolerances: expected object");
    } else {
      const json defaults = default_tolerances();
      for (const auto& [key, value] : t.items()) {
        if (!defaults.contains(key)) {
          issues.push_back("tolerances." + key + ": unknown field");
        } else if (!value.is_number() || !(value.get<double>() > 0.0)) {
          issues.push_back("tolerances." + key + ": expected positive number");
        }
      }
    }
  }
  if (doc.contains("checks")) {
    const auto& checks = doc["checks"];
    if (!checks.is_array()) {
      issues.push_back("checks: expected array");
    } else {
      std::vector<std::string> seen;
      for (std::size_t i = 0; i < checks.size(); ++i) {
        const std::string at = "checks[" + std::to_string(i) + "]";
        const auto& c = checks[i];
        if (!c.is_object()) {
          issues.push_back(at + ": expected object");
          continue;
        }
        if (!c.contains("id") || !c["id"].is_string() || !valid_id(c["id"].get<std::string>())) {
          issues.push_back(at + ".id: expected non-empty string of [A-Za-z0-9_.-]");
        } else {
          const auto id = c["id"].get<std::string>();
          if (std::find(seen.begin(), seen.end(), id) != seen.end()) issues.push_back(at + ".id: duplicate '" + id + "'");
          seen.push_back(id);
        }
        if (!c.contains("type") || !c["type"].is_string()) {
          issues.push_back(at + ".type: required string");
          continue;
        }
        const auto type = c["type"].get<std::string>();
        const auto it = registry().find(type);
        if (it == registry().end()) {
          issues.push_back(at + ".type: unknown check type '" + type + "'");
          continue;
        }
        for (const auto& [key, value] : c.items()) {
          if (key == "id" || key == "type") continue;
          const std::string field = at + "." + key;
          if (key == "seed") {
            if (!is_count(value)) issues.push_back(field + ": expected unsigned 64-bit integer");
          } else if (key == "model") {
            validate_model(value, field, issues);
          } else if (key == "shape" && it->second.uses_shape) {
            validate_shape(value, field, issues);
          } else if (!it->second.defaults.contains(key)) {
            issues.push_back(field + ": unknown parameter for '" + type + "'");
          } else if (!same_kind(value, it->second.defaults[key])) {
            issues.push_back(field + ": expected " + kind_name(it->second.defaults[key]));
          }
        }
      }
    }
  }
  return issues;
}

ExperimentConfig parse_config(const json& doc) {
  auto issues = validate_config(doc);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  ExperimentConfig config;
  config.id = doc["id"].get<std::string>();
  config.seed = doc["seed"].get<std::uint64_t>();
  config.model = doc.value("model", default_model());
  config.shape = doc.value("shape", std::string("reciprocal-holder:alpha=0.25"));
  config.tolerances = default_tolerances();
  if (doc.contains("tolerances")) config.tolerances.update(doc["tolerances"]);
  config.output_dir = doc.value("output_dir", "out/" + config.id);
  for (const auto& c : doc.value("checks", json::array())) {
    CheckSpec spec;
    spec.id = c["id"].get<std::string>();
    spec.type = c["type"].get<std::string>();
    spec.params = registry().at(spec.type).defaults;
    for (const auto& [key, value] : c.items()) {
      if (key != "id" && key != "type") spec.params[key] = value;
    }
    config.checks.push_back(std::move(spec));
  }
  return config;
}

json to_json(const ExperimentConfig& config) {
  json checks = json::array();
  for (const auto& c : config.checks) {
    json entry = c.params;
    entry["id"] = c.id;
    entry["type"] = c.type;
    checks.push_back(std::move(entry));
  }
  return {{"id", config.id},         {"seed", config.seed},
          {"model", config.model},   {"shape", config.shape},
          {"tolerances", config.tolerances}, {"output_dir", config.output_dir},
          {"checks", std::move(checks)}};
}

json config_schema() {
  json check_variants = json::array();
  for (const auto& [type, info] : registry()) {
    json props = {{"id", {{"type", "string"}, {"pattern", "^[A-Za-z0-9_.-]+$"}}},
                  {"type", {{"const", type}}},
                  {"seed", {{"type", "integer"}, {"minimum", 0}}},
                  {"model", {{"$ref", "#/$defs/model"}}}};
    if (info.uses_shape) props["shape"] = {{"type", "string"}};
    for (const auto& [key, value] : info.defaults.items()) {
      json s;
      if (value.is_array()) {
        s = {{"type", "array"}};
        if (value.empty()) {
          s["items"] = {{"type", "string"}};
        } else {
          s["items"] = value.front().is_number_integer() ? json{{"type", "integer"}, {"minimum", 0}}
                                                         : json{{"type", "number"}};
        }
      } else {
        s = value.is_number_integer() ? json{{"type", "integer"}, {"minimum", 0}} : json{{"type", "number"}};
      }
      s["default"] = value;
      props[key] = s;
    }
    check_variants.push_back({{"type", "object"},
                              {"description", info.description},
                              {"required", json::array({"id", "type"})},
                              {"properties", props},
                              {"additionalProperties", false}});
  }
  return {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "shapelab experiment config"},
      {"type", "object"},
      {"required", json::array({"id", "seed"})},
      {"additionalProperties", false},
      {"properties",
       {{"id", {{"type", "string"}, {"pattern", "^[A-Za-z0-9_.-]+$"}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}, {"maximum", 18446744073709551615ULL}}},
        {"model", {{"$ref", "#/$defs/model"}, {"default", default_model()}}},
        {"shape", {{"type", "string"}, {"default", "reciprocal-holder:alpha=0.25"}}},
        {"tolerances",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"gauge", {{"type", "number"}, {"exclusiveMinimum", 0}, {"default", kGaugeTolerance}}},
            {"exact", {{"type", "number"}, {"exclusiveMinimum", 0}, {"default", 1e-9}}}}}}},
        {"output_dir", {{"type", "string"}}},
        {"checks", {{"type", "array"}, {"items", {{"oneOf", check_variants}}}}}}},
      {"$defs",
       {{"model",
         {{"oneOf",
           {{{"type", "object"},
             {"required", {"kind"}},
             {"additionalProperties", false},
             {"properties",
              {{"kind", {{"const", "wiener"}}},
               {"level", {{"type", "integer"}, {"minimum", 1}}},
               {"kl_modes", {{"type", "integer"}, {"minimum", 1}}}}}},
            {{"type", "object"},
             {"required", {"kind"}},
             {"additionalProperties", false},
             {"properties",
              {{"kind", {{"const", "sequence"}}},
               {"dim", {{"type", "integer"}, {"minimum", 1}}},
               {"sigma", {{"type", "array"}, {"items", {{"type", "number"}}}}},
               {"weights", {{"type", "array"}, {"items", {{"type", "number"}}}}},
               {"scale", {{"type", "number"}}}}}}}}}}}}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < length; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(to_json(config).dump()); }

std::uint64_t check_seed(const ExperimentConfig& config, const CheckSpec& check) {
  if (check.params.contains("seed")) return check.params["seed"].get<std::uint64_t>();
  return derive_seed(config.seed, fnv1a(check.id));
}

CheckOutput run_check(const ExperimentConfig& config, const CheckSpec& check) {
  const auto& type = registry().at(check.type);
  const json& model = check.params.contains("model") ? check.params["model"] : config.model;
  const CheckContext context{config, check, check_seed(config, check), make_space(model), check.params};
  return type.run(context);
}

json to_json(const ResultManifest& m) {
  json checks = json::array();
  for (const auto& c : m.checks) {
    json artifacts = json::array();
    for (const auto& a : c.artifacts) artifacts.push_back(to_json(a));
    json entry = {{"id", c.id}, {"type", c.type}, {"pass", c.pass}, {"summary", c.summary}, {"artifacts", artifacts}};
    if (!c.error.empty()) entry["error"] = c.error;
    checks.push_back(std::move(entry));
  }
  json artifacts = json::array();
  for (const auto& a : m.artifacts) artifacts.push_back(to_json(a));
  return {{"config_hash", m.config_hash}, {"tool_version", m.tool_version}, {"timestamp", m.timestamp},
          {"checks", checks},             {"artifacts", artifacts},         {"pass", m.pass}};
}

ResultManifest run(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir = out_dir.empty() ? fs::path(config.output_dir) : out_dir;
  fs::create_directories(dir);

  ResultManifest manifest;
  manifest.config_hash = config_hash(config);
  manifest.timestamp = utc_timestamp();

  auto emit = [&](const std::string& name, const std::string& bytes) {
    std::ofstream os(dir / name, std::ios::binary);
    os << bytes;
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    ArtifactRecord record{name, sha256_hex(bytes)};
    manifest.artifacts.push_back(record);
    return record;
  };
  emit("config.json", dump(to_json(config)));

  std::vector<const CheckSpec*> order;
  for (const auto& c : config.checks) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const CheckSpec* a, const CheckSpec* b) { return a->id < b->id; });

  for (const CheckSpec* spec : order) {
    CheckResult result;
    result.id = spec->id;
    result.type = spec->type;
    const auto start = std::chrono::steady_clock::now();
    try {
      auto output = run_check(config, *spec);
      result.pass = output.pass;
      result.summary = std::move(output.summary);
      for (const auto& [name, bytes] : output.files) result.artifacts.push_back(emit(name, bytes));
    } catch (const std::exception& e) {
      result.pass = false;
      result.error = e.what();
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.pass = manifest.pass && result.pass;
    manifest.checks.push_back(std::move(result));
  }
  std::sort(manifest.artifacts.begin(), manifest.artifacts.end(),
            [](const ArtifactRecord& a, const ArtifactRecord& b) { return a.path < b.path; });

  std::ofstream os(dir / "manifest.json");
  os << dump(to_json(manifest));
  return manifest;
}

json list_builtins() {
  json checks = json::object();
  for (const auto& [type, info] : registry()) {
    checks[type] = {{"description", info.description}, {"defaults", info.defaults}, {"uses_shape", info.uses_shape}};
  }
  return {
      {"shapes",
       {{{"name", "floor"},
         {"spec", "floor:alpha=A"},
         {"alpha_range", {-1.0, 0.0}},
         {"range_open", true},
         {"role", "floor metric shape on the sequence model"}},
        {{"name", "reciprocal-holder"},
         {"spec", "reciprocal-holder:alpha=A"},
         {"alpha_range", {0.0, 0.5}},
         {"range_open", true},
         {"role", "reciprocal Hölder-norm shape on the Wiener model"}},
        {{"name", "identity-control"}, {"spec", "identity"}, {"role", "negative control (fails property d)"}},
        {{"name", "constant"}, {"spec", "constant:factor=F"}, {"role", "negative control (fails codomain or d)"}},
        {{"name", "asymmetric"}, {"spec", "asymmetric"}, {"role", "negative control (fails property a)"}}}},
      {"models",
       {{{"kind", "wiener"}, {"params", {{"level", 8}, {"kl_modes", kDefaultKlModes}}}},
        {{"kind", "sequence"}, {"params", {{"dim", kDefaultSequenceDim}, {"sigma", "ones"}, {"weights", "2^-n"}}}}}},
      {"net_metrics", {"sup", "frechet_seq", "holder:ALPHA"}},
      {"checks", checks}};
}

int exit_code(const ResultManifest& manifest) { return manifest.pass ? 0 : 1; }

}  // namespace shapelab
