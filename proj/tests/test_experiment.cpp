#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "shapelab/experiment.hpp"
#include "shapelab/parallel.hpp"

using namespace shapelab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shapelab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

json small_config() {
  return {{"id", "small"},
          {"seed", 5},
          {"model", {{"kind", "wiener"}, {"level", 6}, {"kl_modes", 16}}},
          {"checks",
           {{{"id", "oracle"}, {"type", "gauge-oracle"}, {"queries", 12}},
            {{"id", "atoms"}, {"type", "build-atoms"}, {"count", 8}},
            {{"id", "cs"}, {"type", "cs-bound"}, {"samples", 20}, {"level", 6}},
            {{"id", "cdf"}, {"type", "full-measure"}, {"samples", 50}, {"level", 6}}}}};
}

bool has_issue(const std::vector<std::string>& issues, const std::string& prefix) {
  for (const auto& i : issues) {
    if (i.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schema violations are itemized") {
  const json bad = {{"seed", -3},
                    {"colour", "red"},
                    {"model", {{"kind", "torus"}}},
                    {"checks",
                     {{{"id", "x"}, {"type", "no-such-check"}},
                      {{"id", "y"}, {"type", "cs-bound"}, {"samples", "many"}, {"bogus", 1}},
                      {{"id", "y"}, {"type", "full-measure"}, {"radii", {1, "two"}}}}}};
  const auto issues = validate_config(bad);
  CHECK(has_issue(issues, "id: required"));
  CHECK(has_issue(issues, "seed:"));
  CHECK(has_issue(issues, "colour: unknown field"));
  CHECK(has_issue(issues, "model:"));
  CHECK(has_issue(issues, "checks[0].type: unknown check type"));
  CHECK(has_issue(issues, "checks[1].samples: expected non-negative integer"));
  CHECK(has_issue(issues, "checks[1].bogus: unknown parameter"));
  CHECK(has_issue(issues, "checks[2].id: duplicate"));
  CHECK(has_issue(issues, "checks[2].radii: expected array of numbers"));

  try {
    parse_config(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues() == issues);
  }
  CHECK(validate_config(json::array()).size() == 1);
  CHECK(validate_config({{"id", "ok"}, {"seed", 1}, {"shape", "floor"}}).size() == 1);
}

TEST_CASE("config round trip fills defaults") {
  const auto config = parse_config(small_config());
  CHECK(config.output_dir == "out/small");
  CHECK(config.shape == "reciprocal-holder:alpha=0.25");
  CHECK(config.tolerances["gauge"] == 1e-8);
  CHECK(config.checks[0].params["dim"] == 3);
  CHECK(config.checks[3].params["alpha"] == 0.25);

  const json once = to_json(config);
  CHECK(to_json(parse_config(once)) == once);
  CHECK(config_hash(parse_config(once)) == config_hash(config));
  CHECK(config_hash(parse_config({{"id", "small"}, {"seed", 6}})) != config_hash(parse_config({{"id", "small"}, {"seed", 5}})));
}

TEST_CASE("check seeds") {
  auto config = parse_config(small_config());
  CHECK(check_seed(config, config.checks[0]) != check_seed(config, config.checks[1]));
  config.checks[0].params["seed"] = 99;
  CHECK(check_seed(config, config.checks[0]) == 99);
}

TEST_CASE("empty check list") {
  const auto dir = scratch("empty");
  const auto manifest = run(parse_config({{"id", "empty"}, {"seed", 0}}), dir);
  CHECK(manifest.checks.empty());
  CHECK(manifest.pass);
  CHECK(exit_code(manifest) == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  REQUIRE(manifest.artifacts.size() == 1);
  CHECK(manifest.artifacts[0].path == "config.json");
}

TEST_CASE("run writes hashed artifacts sorted by check id") {
  const auto dir = scratch("run");
  const auto manifest = run(parse_config(small_config()), dir);
  REQUIRE(manifest.checks.size() == 4);
  CHECK(manifest.checks[0].id == "atoms");
  CHECK(manifest.checks[1].id == "cdf");
  CHECK(manifest.checks[3].id == "oracle");
  CHECK(manifest.pass);
  for (const auto& a : manifest.artifacts) {
    std::ifstream is(dir / a.path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(sha256_hex(bytes) == a.sha256);
  }
  const auto on_disk = json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(on_disk["config_hash"] == manifest.config_hash);
  CHECK(on_disk["tool_version"] == kToolVersion);
  CHECK(on_disk["checks"].size() == 4);
}

TEST_CASE("reruns are byte-identical across worker counts") {
  const auto config = parse_config(small_config());
  set_worker_count(1);
  const auto a = run(config, scratch("det1"));
  set_worker_count(3);
  const auto b = run(config, scratch("det3"));
  set_worker_count(1);
  REQUIRE(a.artifacts.size() == b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
    CHECK(a.artifacts[i].path == b.artifacts[i].path);
    CHECK(a.artifacts[i].sha256 == b.artifacts[i].sha256);
  }
}

TEST_CASE("a failing check does not abort its siblings") {
  json doc = {{"id", "mixed"},
              {"seed", 3},
              {"model", {{"kind", "sequence"}, {"dim", 4}}},
              {"checks",
               {{{"id", "a-sandwich"}, {"type", "sandwich"}, {"counts", {4}}, {"queries", 2}},
                {{"id", "b-atoms"}, {"type", "build-atoms"}, {"shape", "identity"}, {"count", 3}}}}};
  const auto manifest = run(parse_config(doc), scratch("mixed"));
  REQUIRE(manifest.checks.size() == 2);
  CHECK_FALSE(manifest.checks[0].pass);
  CHECK(manifest.checks[0].error.find("wiener") != std::string::npos);
  CHECK(manifest.checks[1].pass);
  CHECK_FALSE(manifest.pass);
  CHECK(exit_code(manifest) == 1);
}

TEST_CASE("verify-shape honours expected failures") {
  json doc = {{"id", "control"},
              {"seed", 2},
              {"model", {{"kind", "sequence"}, {"dim", 16}}},
              {"shape", "identity"},
              {"checks",
               {{{"id", "expected"}, {"type", "verify-shape"}, {"samples", 200}, {"expect_fail", {"d"}}},
                {{"id", "strict"}, {"type", "verify-shape"}, {"samples", 200}}}}};
  const auto config = parse_config(doc);
  const auto expected = run_check(config, config.checks[0]);
  const auto strict = run_check(config, config.checks[1]);
  CHECK(expected.summary["properties"]["d"] == false);
  CHECK(expected.pass);
  CHECK_FALSE(strict.pass);
}

TEST_CASE("builtin catalog") {
  const auto catalog = list_builtins();
  std::map<std::string, json> shapes;
  for (const auto& s : catalog["shapes"]) shapes[s["name"].get<std::string>()] = s;
  CHECK(shapes.at("floor")["alpha_range"] == json({-1.0, 0.0}));
  CHECK(shapes.at("reciprocal-holder")["alpha_range"] == json({0.0, 0.5}));
  CHECK(shapes.at("identity-control")["role"] == "negative control (fails property d)");
  CHECK(catalog["checks"].contains("sandwich"));
  CHECK(catalog["models"].size() == 2);
}

TEST_CASE("schema lists every check type") {
  const auto schema = config_schema();
  CHECK(schema["properties"]["checks"]["items"]["oneOf"].size() == list_builtins()["checks"].size());
  CHECK(schema["required"] == json::array({"id", "seed"}));
}
