// Runs the acceptance config twice (1 and 3 workers), evaluates the ten
// criteria and prints one line per criterion. Exit status is nonzero when a
// criterion fails unless it is listed with --known-fail.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

#include "shapelab/experiment.hpp"
#include "shapelab/parallel.hpp"

using nlohmann::json;
using shapelab::CheckResult;
using shapelab::ResultManifest;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;
  double seconds = 0.0;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!") + what);
  }
};

class Evaluator {
 public:
  explicit Evaluator(const ResultManifest& m) {
    for (const auto& c : m.checks) checks_[c.id] = &c;
  }

  const json& summary(const std::string& id, Verdict& v) const {
    static const json empty = json::object();
    const auto it = checks_.find(id);
    if (it == checks_.end()) {
      v.require(false, id + " missing");
      return empty;
    }
    if (!it->second->error.empty()) v.require(false, id + " error: " + it->second->error);
    v.seconds += it->second->seconds;
    return it->second->summary;
  }

 private:
  std::map<std::string, const CheckResult*> checks_;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

double get(const json& j, const char* key) { return j.contains(key) ? j[key].get<double>() : NAN; }

Verdict c1(const Evaluator& e) {
  Verdict v;
  const auto& cs = e.summary("c1-cs-bound", v);
  v.require(get(cs, "max_ratio") <= 1.0 + 1e-9 && get(cs, "violations") == 0.0,
            "CS max ratio " + num(get(cs, "max_ratio")) + " <= 1+1e-9");
  const auto& sb = e.summary("c1-small-ball", v);
  std::size_t rows = 0;
  for (const auto& row : sb.value("rows", json::array())) {
    ++rows;
    v.require(row["violations"] == 0 && row["filtered"].get<std::size_t>() >= 50,
              "small-ball eps=" + num(row["epsilon"]) + " alpha=" + num(row["alpha"]) + " filtered " +
                  std::to_string(row["filtered"].get<std::size_t>()) + " violations " +
                  std::to_string(row["violations"].get<std::size_t>()));
  }
  v.require(rows == 4, "4 (eps, alpha) pairs");
  v.require(v.seconds <= 120.0, "runtime <= 2 min");
  return v;
}

Verdict c2(const Evaluator& e) {
  Verdict v;
  for (const char* id : {"c2-floor", "c2-reciprocal-holder"}) {
    const auto& s = e.summary(id, v);
    const json props = s.value("properties", json::object());
    bool all = !props.empty();
    for (const auto& ok : props) all = all && ok.get<bool>();
    v.require(all, std::string(id) + " passes a, codomain, b, c, d");
  }
  const auto& control = e.summary("c2-identity-control", v);
  v.require(control.contains("properties") && control["properties"]["d"] == false, "identity control fails d");
  v.require(v.seconds <= 60.0, "runtime <= 1 min");
  return v;
}

Verdict c3(const Evaluator& e) {
  Verdict v;
  const auto& s = e.summary("c3-gauge-oracle", v);
  v.require(s.value("mismatches", 1) == 0 && s.value("queries", 0) == 100,
            "100 queries match, max error " + num(get(s, "max_error")));
  v.require(s.value("infeasible", 0) > 0, std::to_string(s.value("infeasible", 0)) + " infeasible cases");
  v.require(v.seconds <= 10.0, "runtime <= 10 s");
  return v;
}

Verdict c4(const Evaluator& e) {
  Verdict v;
  const auto& laws = e.summary("c4-gauge-laws", v);
  v.require(laws.value("homogeneity_violations", 1) == 0 && laws.value("triangle_violations", 1) == 0 &&
                laws.value("nonoptimal", 1) == 0 && laws.value("pairs", 0) == 100,
            "homogeneity and triangle on 100 pairs");
  const auto& profile = e.summary("c4-gauge-profile", v);
  v.require(profile.value("violations", 1) == 0, "profile nonincreasing 2^7..2^10 atoms");
  const auto& enlarge = e.summary("c4-enlargement", v);
  v.require(enlarge.value("violations", 1) == 0, "enlargement monotone");
  v.require(v.seconds <= 300.0, "runtime <= 5 min");
  return v;
}

Verdict c5(const Evaluator& e) {
  Verdict v;
  const auto& s = e.summary("c5-sandwich", v);
  v.require(s.value("lower_failures", 1) == 0, "holder <= gauge + 1e-8");
  const auto gaps = s.value("median_gap", json::array());
  v.require(gaps.size() == 2 && gaps[1].get<double>() < gaps[0].get<double>(),
            gaps.size() == 2 ? "median gap 2^8 atoms " + num(gaps[0]) + " > 2^12 atoms " + num(gaps[1])
                             : "median gaps");
  v.require(v.seconds <= 600.0, "runtime <= 10 min");
  return v;
}

Verdict c6(const Evaluator& e) {
  Verdict v;
  const auto& s = e.summary("c6-full-measure", v);
  v.require(s.value("monotone", false), "CDF monotone");
  v.require(get(s, "crossing_radius") >= 0.0, "p_hat >= 0.99 at r = " + num(get(s, "crossing_radius")));
  v.require(v.seconds <= 120.0, "runtime <= 2 min");
  return v;
}

Verdict c7(const Evaluator& e) {
  Verdict v;
  const auto& s = e.summary("c7-dichotomy", v);
  const auto ratios = s.value("ratios", json::object());
  const double stable = ratios.contains("0.25") ? ratios["0.25"][0].get<double>() : NAN;
  const double divergent = ratios.contains("0.75") ? ratios["0.75"][0].get<double>() : NAN;
  v.require(stable >= 0.8 && stable <= 1.2, "alpha 0.25 ratio " + num(stable) + " in [0.8, 1.2]");
  const double floor = std::pow(2.0, 0.25) * 0.85;
  v.require(divergent >= floor, "alpha 0.75 ratio " + num(divergent) + " >= " + num(floor));
  v.require(v.seconds <= 180.0, "runtime <= 3 min");
  return v;
}

Verdict c8(const Evaluator& e) {
  Verdict v;
  const auto& s = e.summary("c8-witnesses", v);
  const double ratio = s.contains("h12_ratios") ? s["h12_ratios"][0].get<double>() : NAN;
  // Two levels of growth by sqrt(2) each.
  v.require(std::abs(ratio / 2.0 - 1.0) <= 0.15, "h12 ratio 8->10 " + num(ratio) + " = 2 within 15%");
  bool line = s.contains("line_h12");
  for (const auto& x : s.value("line_h12", json::array())) line = line && std::abs(x.get<double>() - 1.0) <= 1e-12;
  v.require(line, "f(t)=t h12 constant");
  v.require(v.seconds <= 60.0, "runtime <= 1 min");
  return v;
}

Verdict c9(const Evaluator& e) {
  Verdict v;
  for (const char* id : {"c9-covering", "c9-compactness-floor", "c9-compactness-reciprocal-holder"}) {
    const auto& s = e.summary(id, v);
    for (const auto& net : s.value("nets", json::array())) {
      v.require(net["saturated"].get<bool>(), std::string(id) + " eps=" + num(net["epsilon"]) + " " +
                                                  std::to_string(net["half"].get<int>()) + "->" +
                                                  std::to_string(net["full"].get<int>()));
    }
  }
  v.require(v.seconds <= 180.0, "runtime <= 3 min");
  return v;
}

Verdict c10(const ResultManifest& a, const ResultManifest& b) {
  Verdict v;
  const bool same_config = a.config_hash == b.config_hash;
  bool same = same_config && a.artifacts.size() == b.artifacts.size();
  std::size_t differing = 0;
  for (const auto& c : b.checks) v.seconds += c.seconds;
  for (std::size_t i = 0; same && i < a.artifacts.size(); ++i) {
    if (a.artifacts[i].path != b.artifacts[i].path || a.artifacts[i].sha256 != b.artifacts[i].sha256) ++differing;
  }
  v.require(same && differing == 0, std::to_string(a.artifacts.size()) + " artifacts byte-identical at 1 and 3 workers");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string config_path, out = "acceptance_out";
  std::vector<int> known_fail;
  app.add_option("--config", config_path, "Acceptance config")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory");
  app.add_option("--known-fail", known_fail, "Criteria whose failure is documented");
  CLI11_PARSE(app, argc, argv);

  std::ifstream is(config_path);
  const auto config = shapelab::parse_config(json::parse(is));

  shapelab::set_worker_count(1);
  const auto first = shapelab::run(config, std::filesystem::path(out) / "threads1");
  shapelab::set_worker_count(3);
  const auto second = shapelab::run(config, std::filesystem::path(out) / "threads3");

  const Evaluator e(first);
  const std::vector<std::pair<std::string, Verdict>> verdicts = {
      {"exact inequalities", c1(e)},  {"shape verification", c2(e)}, {"gauge oracle", c3(e)},
      {"gauge laws", c4(e)},          {"sandwich", c5(e)},           {"full measure", c6(e)},
      {"dichotomy", c7(e)},           {"containment witnesses", c8(e)}, {"compactness", c9(e)},
      {"determinism", c10(first, second)}};

  const std::set<int> known(known_fail.begin(), known_fail.end());
  int passed = 0, unexpected = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& [name, v] = verdicts[i];
    const int id = static_cast<int>(i) + 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << ", " << num(v.seconds)
              << " s):";
    for (const auto& n : v.notes) std::cout << ' ' << n << ';';
    if (!v.pass && known.count(id)) std::cout << " [known failure]";
    std::cout << '\n';
    if (v.pass) ++passed;
    else if (!known.count(id)) ++unexpected;
  }
  std::cout << passed << "/10 criteria pass; " << unexpected << " unexpected failure(s)\n";
  return unexpected == 0 ? 0 : 1;
}
