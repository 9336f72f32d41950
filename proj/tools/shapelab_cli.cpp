// shapelab command-line driver.
//
//   shapelab run --config configs/holder_example.json --out out/ --threads 4
//   shapelab verify-shape --shape floor:alpha=-0.5 --model sequence --dim 64
//   shapelab gauge --atoms atoms.csv --query query.csv
//   shapelab list
//
// Exit status: 0 all checks pass, 1 a check failed, 2 configuration error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "shapelab/experiment.hpp"
#include "shapelab/generated_space.hpp"
#include "shapelab/grid_function.hpp"
#include "shapelab/parallel.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int threads = 1;
};

struct ModelFlags {
  std::string kind;
  int level = 8;
  int kl_modes = 64;
  int dim = 64;
};

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return json::parse(is);
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(is, line)) {
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      if (!cell.empty()) values.push_back(std::stod(cell));
    }
  }
  return values;
}

fs::path output_dir(const Common& common, const std::string& fallback) {
  if (!common.out.empty()) return common.out;
  if (const char* env = std::getenv("SHAPELAB_OUT")) return fs::path(env) / fallback;
  return fs::path("out") / fallback;
}

// Base document from --config (checks dropped) with --seed applied.
json base_document(const Common& common, const std::string& id) {
  json doc = common.config_path.empty() ? json{{"id", id}, {"seed", 0}} : read_json(common.config_path);
  doc["id"] = id;
  doc.erase("checks");
  doc.erase("output_dir");
  if (common.seed_set) doc["seed"] = common.seed;
  return doc;
}

void apply_model(json& doc, const ModelFlags& m) {
  if (m.kind == "wiener") doc["model"] = {{"kind", "wiener"}, {"level", m.level}, {"kl_modes", m.kl_modes}};
  if (m.kind == "sequence") doc["model"] = {{"kind", "sequence"}, {"dim", m.dim}};
}

void print_manifest(const shapelab::ResultManifest& manifest, const fs::path& dir) {
  for (const auto& c : manifest.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.id << " [" << c.type << "] " << c.summary.dump();
    if (!c.error.empty()) std::cout << " error: " << c.error;
    std::cout << '\n';
  }
  std::cout << "manifest: " << (dir / "manifest.json").string() << " config " << manifest.config_hash << '\n';
}

int run_document(const json& doc, const Common& common) {
  const auto config = shapelab::parse_config(doc);
  const fs::path dir = common.out.empty() && !common.config_path.empty() && doc.contains("output_dir")
                           ? fs::path(config.output_dir)
                           : output_dir(common, config.id);
  const auto manifest = shapelab::run(config, dir);
  print_manifest(manifest, dir);
  return shapelab::exit_code(manifest);
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { common.seed = s; common.seed_set = true; }, "Master seed");
  cmd->add_option("--out", common.out, "Output directory (default $SHAPELAB_OUT or ./out)");
  cmd->add_option("--threads", common.threads, "Worker threads; affects speed only")->check(CLI::PositiveNumber);
}

void add_model(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--model", m.kind, "Model kind")->check(CLI::IsMember({"wiener", "sequence"}));
  cmd->add_option("--level", m.level, "Wiener grid level");
  cmd->add_option("--kl-modes", m.kl_modes, "Wiener KL modes for H directions");
  cmd->add_option("--dim", m.dim, "Sequence model dimension");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape functions, generated spaces and Gaussian embedding diagnostics"};
  app.require_subcommand(1);
  Common common;
  ModelFlags model;

  auto* run = app.add_subcommand("run", "Run every check of a config");
  add_common(run, common);
  run->get_option("--config")->required();

  auto* sample = app.add_subcommand("sample", "Draw samples of the Gaussian measure");
  std::size_t sample_count = 4;
  add_common(sample, common);
  add_model(sample, model);
  sample->add_option("--count", sample_count, "Number of samples");

  auto* norms = app.add_subcommand("norms", "Norms of a grid function read from CSV (t,value)");
  std::string grid_path;
  double alpha = 0.25, delta = 0.0;
  norms->add_option("--input", grid_path, "Grid CSV")->required()->check(CLI::ExistingFile);
  norms->add_option("--alpha", alpha, "Hölder exponent");
  norms->add_option("--delta", delta, "Localization for modulus and small-Hölder defect");

  auto* verify = app.add_subcommand("verify-shape", "Check shape-function properties a, codomain, b, c, d");
  std::string shape;
  std::size_t samples = 1000;
  std::vector<std::string> expect_fail;
  add_common(verify, common);
  add_model(verify, model);
  verify->add_option("--shape", shape, "Shape, e.g. floor:alpha=-0.5");
  verify->add_option("--samples", samples, "Sphere samples");
  verify->add_option("--expect-fail", expect_fail, "Properties expected to fail");

  auto* atoms_cmd = app.add_subcommand("build-atoms", "Build symmetric atoms phi(S^H)");
  std::size_t atom_count = 256;
  add_common(atoms_cmd, common);
  add_model(atoms_cmd, model);
  atoms_cmd->add_option("--shape", shape, "Shape");
  atoms_cmd->add_option("--count", atom_count, "Number of generators");

  auto* gauge_cmd = app.add_subcommand("gauge", "Gauge of queries with respect to an atom file");
  std::string atoms_path, query_path;
  gauge_cmd->add_option("--atoms", atoms_path, "Atom CSV (one generator per row)")->required()->check(CLI::ExistingFile);
  gauge_cmd->add_option("--query", query_path, "Query CSV (one query per row)")->required()->check(CLI::ExistingFile);
  gauge_cmd->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* diag = app.add_subcommand("embed-diag", "Embedding diagnostics");
  std::string diag_check;
  add_common(diag, common);
  add_model(diag, model);
  diag->add_option("--check", diag_check, "Diagnostic")
      ->required()
      ->check(CLI::IsMember({"covering", "full-measure", "dichotomy", "cs", "small-ball", "witnesses", "small-holder"}));
  diag->add_option("--samples", samples, "Sample count");

  auto* list = app.add_subcommand("list", "Built-in shapes, models and checks");
  auto* schema = app.add_subcommand("schema", "JSON Schema of experiment configs");

  CLI11_PARSE(app, argc, argv);

  try {
    shapelab::set_worker_count(common.threads);

    if (*run) {
      json doc = read_json(common.config_path);
      if (common.seed_set) doc["seed"] = common.seed;
      return run_document(doc, common);
    }

    if (*list) {
      std::cout << shapelab::list_builtins().dump(2) << '\n';
      return 0;
    }
    if (*schema) {
      std::cout << shapelab::config_schema().dump(2) << '\n';
      return 0;
    }

    if (*norms) {
      std::ifstream is(grid_path);
      const auto f = shapelab::read_grid_csv(is);
      json out = {{"level", f.level()},
                  {"sup", shapelab::sup_norm(f)},
                  {"holder", shapelab::holder_norm(f, alpha)},
                  {"alpha", alpha},
                  {"h12", shapelab::h12_norm(f)}};
      if (delta > 0.0) {
        out["delta"] = delta;
        out["modulus"] = shapelab::modulus_of_continuity(f, delta);
        out["small_holder_defect"] = shapelab::small_holder_defect(f, alpha, delta);
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (*gauge_cmd) {
      std::ifstream is(atoms_path);
      const shapelab::GaugeEngine engine(shapelab::read_atoms_csv(is));
      const auto dim = engine.atoms().ambient_dim();
      const auto values = read_numbers(query_path);
      if (values.empty() || values.size() % static_cast<std::size_t>(dim) != 0) {
        throw std::invalid_argument("query file does not hold rows of dimension " + std::to_string(dim));
      }
      json results = json::array();
      for (std::size_t q = 0; q < values.size() / static_cast<std::size_t>(dim); ++q) {
        const shapelab::Vector x = Eigen::Map<const shapelab::Vector>(values.data() + q * dim, dim);
        results.push_back(shapelab::to_json(engine(x)));
      }
      std::cout << results.dump(2) << '\n';
      return 0;
    }

    json check;
    std::string id;
    if (*sample) {
      id = "sample";
      check = {{"id", id}, {"type", "sample"}, {"count", sample_count}};
    } else if (*verify) {
      id = "verify-shape";
      check = {{"id", id}, {"type", "verify-shape"}, {"samples", samples}, {"expect_fail", expect_fail}};
    } else if (*atoms_cmd) {
      id = "build-atoms";
      check = {{"id", id}, {"type", "build-atoms"}, {"count", atom_count}};
    } else {
      id = diag_check == "cs" ? "cs-bound" : diag_check;
      check = {{"id", id}, {"type", id}};
      if (diag->count("--samples") > 0) check["samples"] = samples;
    }
    json doc = base_document(common, id);
    apply_model(doc, model);
    if (!shape.empty()) doc["shape"] = shape;
    doc["checks"] = json::array({check});
    return run_document(doc, Common{"", common.seed, common.seed_set, common.out, common.threads});
  } catch (const shapelab::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "invalid JSON: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
