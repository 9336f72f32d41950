#include "shapelab/shape_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "shapelab/parallel.hpp"

namespace shapelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const WienerSpace& require_wiener(const GaussianSpace& space, const char* who) {
  const auto* wiener = dynamic_cast<const WienerSpace*>(&space);
  if (wiener == nullptr) {
    throw std::invalid_argument(std::string(who) + " requires the Wiener model");
  }
  return *wiener;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// Per-sample quantities shared by the verifiers.
struct SampleData {
  double metric = 0.0;    // d(0, x)
  double factor = 0.0;    // |phi|(x)
  double cm_image = 0.0;  // cm_norm(phi(x))
  double target_gap = 0.0;
};

std::vector<SampleData> evaluate_plan(const ShapeFunction& phi, const GaussianSpace& space,
                                      std::size_t samples, std::uint64_t seed, bool with_image,
                                      bool with_target) {
  std::vector<SampleData> data(samples);
  parallel_for(samples, [&](std::size_t i) {
    const CMVector x = sample_sphere_plan(space, seed, i);
    SampleData& d = data[i];
    d.metric = space.metric(x.point);
    d.factor = radial_factor(phi, space, x);
    if (with_image || with_target) {
      Vector image = d.factor * x.point;
      if (phi.offset) image += *phi.offset;
      if (with_image) d.cm_image = space.cm_norm(image);
      if (with_target) d.target_gap = phi.target.distance(space, image);
    }
  });
  return data;
}

std::vector<double> sorted_descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

NormFunction holder_norm_function(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("Hölder exponent must lie in (0, 1)");
  }
  return {"holder",
          {{"alpha", alpha}},
          [alpha](const GaussianSpace& space, const Vector& x) {
            return holder_norm(require_wiener(space, "Hölder norm").as_grid(x), alpha);
          }};
}

TargetSet TargetSet::origin() {
  TargetSet t;
  t.kind = Kind::kOrigin;
  return t;
}

TargetSet TargetSet::norm_ball(NormFunction norm, double radius) {
  TargetSet t;
  t.kind = Kind::kNormBall;
  t.norm = std::move(norm);
  t.radius = radius;
  return t;
}

double TargetSet::distance(const GaussianSpace& space, const Vector& y) const {
  switch (kind) {
    case Kind::kOrigin:
      return space.metric(y);
    case Kind::kNormBall: {
      const double n = norm->evaluate(space, y);
      if (n <= radius * (1.0 + 1e-12)) return 0.0;
      return space.metric(y - (radius / n) * y);
    }
    case Kind::kNone:
      break;
  }
  throw std::invalid_argument("no net available for this target set");
}

nlohmann::json TargetSet::describe() const {
  switch (kind) {
    case Kind::kOrigin:
      return {{"kind", "origin"}};
    case Kind::kNormBall:
      return {{"kind", "norm-ball"}, {"norm", norm->name}, {"params", norm->params}, {"radius", radius}};
    case Kind::kNone:
      break;
  }
  return {{"kind", "none"}};
}

nlohmann::json ShapeFunction::describe() const {
  nlohmann::json j = {{"name", name}, {"params", params}, {"target", target.describe()}, {"role", role}};
  if (offset) j["offset_norm"] = offset->norm();
  return j;
}

ShapeFunction floor_metric_shape(double alpha) {
  if (!(alpha > -1.0 && alpha < 0.0)) {
    throw std::invalid_argument("floor shape exponent must lie in (-1, 0)");
  }
  ShapeFunction phi;
  phi.name = "floor";
  phi.params = {{"alpha", alpha}};
  phi.radial_factor = [alpha](const GaussianSpace& space, const Vector& x) {
    return std::floor(std::pow(space.metric(x), alpha));
  };
  phi.target = TargetSet::origin();
  return phi;
}

ShapeFunction reciprocal_norm_shape(NormFunction norm) {
  ShapeFunction phi;
  phi.name = "reciprocal-" + norm.name;
  phi.params = norm.params;
  phi.radial_factor = [evaluate = norm.evaluate](const GaussianSpace& space, const Vector& x) {
    const double n = evaluate(space, x);
    if (!(n > 0.0)) {
      throw std::domain_error("norm vanishes on a nonzero point; it must separate points");
    }
    return 1.0 / n;
  };
  phi.target = TargetSet::norm_ball(std::move(norm));
  return phi;
}

ShapeFunction reciprocal_holder_shape(double alpha) {
  return reciprocal_norm_shape(holder_norm_function(alpha));
}

ShapeFunction identity_shape() {
  ShapeFunction phi;
  phi.name = "identity";
  phi.radial_factor = [](const GaussianSpace&, const Vector&) { return 1.0; };
  phi.target = TargetSet::norm_ball(
      {"cameron-martin", nlohmann::json::object(),
       [](const GaussianSpace& space, const Vector& x) { return space.cm_norm(x); }});
  phi.role = "negative control: fails property d";
  return phi;
}

ShapeFunction constant_factor_shape(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("constant factor must be positive");
  }
  ShapeFunction phi;
  phi.name = "constant";
  phi.params = {{"factor", factor}};
  phi.radial_factor = [factor](const GaussianSpace&, const Vector&) { return factor; };
  phi.target = TargetSet::origin();
  phi.role = factor < 1.0 ? "negative control: fails codomain"
                          : "negative control: fails properties b and d";
  return phi;
}

ShapeFunction asymmetric_shape() {
  ShapeFunction phi;
  phi.name = "asymmetric";
  phi.radial_factor = [](const GaussianSpace&, const Vector& x) {
    const Eigen::Index idx = x.size() > 1 ? 1 : 0;
    return x[idx] > 0.0 ? 2.0 : 1.0;
  };
  phi.target = TargetSet::origin();
  phi.role = "negative control: fails property a";
  return phi;
}

ShapeFunction offset_shape(Vector offset) {
  ShapeFunction phi;
  phi.name = "offset";
  phi.params = {{"offset_norm", offset.norm()}};
  phi.radial_factor = [](const GaussianSpace&, const Vector&) { return 1.0; };
  phi.target = TargetSet::origin();
  phi.offset = std::move(offset);
  phi.role = "negative control: fails property b";
  return phi;
}

double radial_factor(const ShapeFunction& phi, const GaussianSpace& space, const CMVector& x) {
  const double norm = space.cm_norm(x.point);
  if (std::abs(norm - 1.0) > 1e-9) {
    throw std::invalid_argument("shape functions are defined on the Cameron-Martin unit sphere");
  }
  const double k = phi.radial_factor(space, x.point);
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw std::domain_error("shape radial factor must be positive and finite");
  }
  return k;
}

Vector eval_shape(const ShapeFunction& phi, const GaussianSpace& space, const CMVector& x) {
  Vector image = radial_factor(phi, space, x) * x.point;
  if (phi.offset) image += *phi.offset;
  return image;
}

Vector homogeneous_extension(const ShapeFunction& phi, const GaussianSpace& space, const Vector& x) {
  const double norm = space.cm_norm(x);
  if (!std::isfinite(norm)) {
    throw std::invalid_argument("homogeneous extension needs a point of H");
  }
  if (norm == 0.0) {
    return Vector::Zero(x.size());
  }
  const CMVector unit = make_cm_vector(space, x / norm);
  return norm * eval_shape(phi, space, unit);
}

// ---------------------------------------------------------------------------

std::string to_string(ShapeProperty p) {
  switch (p) {
    case ShapeProperty::kA: return "a";
    case ShapeProperty::kB: return "b";
    case ShapeProperty::kC: return "c";
    case ShapeProperty::kD: return "d";
    case ShapeProperty::kCodomain: return "codomain";
  }
  return "?";
}

nlohmann::json to_json(const ShapeCheckReport& r) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : r.table) {
    nlohmann::json j = {{"parameter", row.parameter}, {"count", row.count}, {"value", finite_or_null(row.value)}};
    if (r.property == ShapeProperty::kC) j["value_doubled"] = finite_or_null(row.value_doubled);
    table.push_back(std::move(j));
  }
  return {{"property", to_string(r.property)},
          {"samples_used", r.samples_used},
          {"statistic", finite_or_null(r.statistic)},
          {"pass", r.pass},
          {"details", std::move(table)},
          {"note", r.note}};
}

ShapeCheckReport check_property_a(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::size_t samples, std::uint64_t seed,
                                  const ShapeCheckConfig& config) {
  if (samples < 10) throw std::invalid_argument("property (a) check needs at least 10 samples");
  std::vector<double> defect(samples);
  std::vector<char> positive(samples);
  parallel_for(samples, [&](std::size_t i) {
    const CMVector x = sample_sphere_plan(space, seed, i);
    const CMVector minus{-x.point, x.cm_norm};
    const double k_plus = phi.radial_factor(space, x.point);
    const double k_minus = phi.radial_factor(space, minus.point);
    positive[i] = k_plus > 0.0 && std::isfinite(k_plus) && k_minus > 0.0 && std::isfinite(k_minus);
    if (!positive[i]) {
      defect[i] = kInf;
      return;
    }
    Vector sum = k_plus * x.point + k_minus * minus.point;
    if (phi.offset) sum += 2.0 * *phi.offset;
    const double scale = std::max(1.0, k_plus * x.point.cwiseAbs().maxCoeff());
    defect[i] = std::max(sum.cwiseAbs().maxCoeff() / scale,
                         std::abs(k_plus - k_minus) / std::max(1.0, k_plus));
  });
  ShapeCheckReport report{ShapeProperty::kA, samples, 0.0, true, {}, ""};
  std::size_t failures = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    report.statistic = std::max(report.statistic, defect[i]);
    if (!positive[i] || defect[i] > config.oddness_tol) ++failures;
  }
  report.pass = failures == 0;
  report.note = std::to_string(failures) + " samples violate positivity or oddness";
  return report;
}

ShapeCheckReport check_codomain(const ShapeFunction& phi, const GaussianSpace& space,
                                std::size_t samples, std::uint64_t seed,
                                const ShapeCheckConfig& config) {
  std::vector<double> metric(samples), cm(samples);
  parallel_for(samples, [&](std::size_t i) {
    const Vector image = eval_shape(phi, space, sample_sphere_plan(space, seed, i));
    metric[i] = space.metric(image);
    cm[i] = space.cm_norm(image);
  });
  const double max_metric = *std::max_element(metric.begin(), metric.end());
  const double min_cm = *std::min_element(cm.begin(), cm.end());
  ShapeCheckReport report{ShapeProperty::kCodomain, samples, max_metric, true, {}, ""};
  report.pass = max_metric <= 1.0 + config.codomain_tol && min_cm >= 1.0 - config.codomain_tol;
  std::ostringstream note;
  note << "max d(0, phi(x)) = " << max_metric << ", min cm_norm(phi(x)) = " << min_cm;
  report.note = note.str();
  report.table.push_back({1.0, samples, max_metric, 0.0});
  report.table.push_back({-1.0, samples, min_cm, 0.0});
  return report;
}

ShapeCheckReport check_property_b(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::vector<double> radii, std::size_t samples,
                                  std::uint64_t seed, const ShapeCheckConfig& config) {
  if (phi.target.kind == TargetSet::Kind::kNone) {
    throw std::invalid_argument("property (b) needs a target set with a net");
  }
  radii = sorted_descending(std::move(radii));
  const auto data = evaluate_plan(phi, space, samples, seed, false, true);
  ShapeCheckReport report{ShapeProperty::kB, samples, kInf, false, {}, ""};
  bool monotone = true;
  double last = kInf;
  std::size_t evaluated = 0;
  for (double r : radii) {
    ShapeCheckRow row{r, 0, 0.0, 0.0};
    for (const auto& d : data) {
      if (d.metric <= r) {
        ++row.count;
        row.value = std::max(row.value, d.target_gap);
      }
    }
    if (row.count == 0) {
      row.value = std::numeric_limits<double>::quiet_NaN();
    } else {
      monotone = monotone && row.value <= last;
      last = row.value;
      ++evaluated;
    }
    report.table.push_back(row);
  }
  const double resolution = std::max(phi.target.net_resolution, config.net_resolution);
  report.statistic = last;
  report.pass = evaluated > 0 && monotone && last <= 10.0 * resolution;
  report.note = "sup dist(phi(x), T) over d(0,x) <= r must decrease below " +
                std::to_string(10.0 * resolution);
  return report;
}

ShapeCheckReport check_property_c(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::vector<double> eps_list, std::size_t samples,
                                  std::uint64_t seed, const ShapeCheckConfig& config) {
  for (double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("property (c) needs positive epsilons");
  }
  eps_list = sorted_descending(std::move(eps_list));
  const auto data = evaluate_plan(phi, space, 2 * samples, seed, true, false);
  ShapeCheckReport report{ShapeProperty::kC, 2 * samples, 0.0, true, {}, ""};
  std::size_t evaluated = 0;
  for (double eps : eps_list) {
    ShapeCheckRow row{eps, 0, 0.0, 0.0};
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].metric < eps) continue;
      if (i < samples) {
        ++row.count;
        row.value = std::max(row.value, data[i].cm_image);
      }
      row.value_doubled = std::max(row.value_doubled, data[i].cm_image);
    }
    report.table.push_back(row);
    if (row.count == 0) continue;
    ++evaluated;
    const bool stable = std::isfinite(row.value_doubled) &&
                        row.value_doubled <= row.value * (1.0 + config.stability_tol);
    report.pass = report.pass && stable;
    report.statistic = std::max(report.statistic, row.value_doubled);
  }
  report.pass = report.pass && evaluated > 0;
  report.note = "sup cm_norm(phi(x)) over d(0,x) >= eps must grow < " +
                std::to_string(config.stability_tol * 100.0) + "% when N doubles";
  return report;
}

ShapeCheckReport check_property_d(const ShapeFunction& phi, const GaussianSpace& space,
                                  std::vector<double> radii, std::size_t samples,
                                  std::uint64_t seed, const ShapeCheckConfig& config) {
  radii = sorted_descending(std::move(radii));
  const auto data = evaluate_plan(phi, space, samples, seed, false, false);
  ShapeCheckReport report{ShapeProperty::kD, samples, 0.0, false, {}, ""};
  std::vector<double> infima;
  std::size_t skipped = 0;
  for (double r : radii) {
    ShapeCheckRow row{r, 0, kInf, 0.0};
    for (const auto& d : data) {
      if (d.metric <= r) {
        ++row.count;
        row.value = std::min(row.value, d.factor);
      }
    }
    report.table.push_back(row);
    if (row.count == 0) {
      ++skipped;
      continue;
    }
    infima.push_back(row.value);
  }
  bool monotone = true;
  for (std::size_t k = 1; k < infima.size(); ++k) monotone = monotone && infima[k] >= infima[k - 1];
  if (infima.size() >= 2) {
    const double last = infima.back();
    const double ratio = last / infima[infima.size() - 2];
    report.statistic = ratio;
    report.pass = monotone && (last >= config.divergence_cap || ratio >= config.growth_factor);
  }
  report.note = std::to_string(skipped) + " radii without samples skipped";
  return report;
}

ShapeCheckSchedule default_schedule(const ShapeFunction& phi, const GaussianSpace& space) {
  ShapeCheckSchedule s;
  if (space.kind() == "wiener") {
    s.b_radii = {0.5, 0.2, 0.1, 0.05, 0.02};
    s.c_eps = {0.025, 0.0125};
    s.d_radii = {0.2, 0.05, 0.0125};
    return s;
  }
  // Sequence model: metric values span many octaves, so radii are geometric.
  for (int k = 1; k <= 8; ++k) s.b_radii.push_back(std::ldexp(1.0, -4 * k));
  double alpha = -0.5;
  if (phi.name == "floor") alpha = phi.params.at("alpha").get<double>();
  // Just past the floor's jump points d^alpha = m the sup of the integer
  // factor over {d >= eps} is m - 1, reached on a wide band of d.
  for (double m : {2.0, 3.0, 4.0}) s.c_eps.push_back(std::pow(m, 1.0 / alpha));
  for (double m : {2.0, 32.0, 512.0, 8192.0}) s.d_radii.push_back(std::pow(m, 1.0 / alpha));
  return s;
}

std::vector<ShapeCheckReport> check_all(const ShapeFunction& phi, const GaussianSpace& space,
                                        const ShapeCheckSchedule& schedule, std::size_t samples,
                                        std::uint64_t seed, const ShapeCheckConfig& config) {
  return {check_property_a(phi, space, samples, seed, config),
          check_codomain(phi, space, samples, seed, config),
          check_property_b(phi, space, schedule.b_radii, samples, seed, config),
          check_property_c(phi, space, schedule.c_eps, samples, seed, config),
          check_property_d(phi, space, schedule.d_radii, samples, seed, config)};
}

ShapeFunction parse_shape(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  nlohmann::json params = nlohmann::json::object();
  if (colon != std::string::npos) {
    std::stringstream rest(spec.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("bad shape parameter: " + item);
      params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
  }
  auto param = [&](const char* key) {
    if (!params.contains(key)) throw std::invalid_argument("shape '" + name + "' needs " + key);
    return params[key].get<double>();
  };
  if (name == "floor") return floor_metric_shape(param("alpha"));
  if (name == "reciprocal-holder") return reciprocal_holder_shape(param("alpha"));
  if (name == "identity" || name == "identity-control") return identity_shape();
  if (name == "constant") return constant_factor_shape(param("factor"));
  if (name == "asymmetric") return asymmetric_shape();
  throw std::invalid_argument("unknown shape: " + name);
}

}  // namespace shapelab
