#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nodal/nodal.hpp"

namespace {

using nodal::pipeline::RunConfig;

struct Flags {
  std::string preset, backend, domain, direction, out, config_file;
  std::vector<int> mode;
  std::vector<double> size, t;
  std::optional<double> h, strip_h, tol_zero, tol_crit, t0;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
};

void add_flags(CLI::App* app, Flags& f, bool with_config) {
  app->set_help_flag("--help", "print this help message and exit");
  app->add_option("--preset", f.preset, "named acceptance case")
      ->check(CLI::IsMember(nodal::pipeline::preset_names()));
  app->add_option("--backend", f.backend, "square backend: separable or grid");
  app->add_option("--domain", f.domain, "rectangle, torus or circle");
  app->add_option("--mode", f.mode, "mode indices m n")->expected(2);
  app->add_option("--size", f.size, "domain lengths a b")->expected(2);
  app->add_option("--h", f.h, "grid spacing");
  app->add_option("--strip-h", f.strip_h, "strip-mapped spacing");
  app->add_option("--k", f.k, "number of circle arcs");
  app->add_option("--direction", f.direction, "deformation direction: 1, 2, 3 or random");
  app->add_option("--t", f.t, "deformation parameters")->expected(1, -1);
  app->add_option("--t0", f.t0, "second-derivative step");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--tol-zero", f.tol_zero, "zero threshold constant C0 (tau = C0 h)");
  app->add_option("--tol-crit", f.tol_crit, "criticality tolerance in units of h");
  app->add_option("--seed", f.seed, "seed for random directions");
  if (with_config) app->add_option("--config", f.config_file, "JSON configuration file")->check(CLI::ExistingFile);
}

RunConfig resolve(const std::string& command, const Flags& f) {
  RunConfig c;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw nodal::Error(nodal::ErrorCode::InvalidConfig, std::string("cannot parse config: ") + e.what());
    }
    if (j.contains("preset")) nodal::pipeline::apply_preset(c, j["preset"].get<std::string>());
    nodal::pipeline::apply_json(c, j);
  }
  if (!f.preset.empty()) nodal::pipeline::apply_preset(c, f.preset, command == "run");
  if (command != "run") c.command = command;
  if (command == "circle") c.domain = "circle";
  if (command == "square") c.domain = "rectangle";
  if (!f.backend.empty()) c.backend = f.backend;
  if (!f.domain.empty()) c.domain = f.domain;
  if (f.mode.size() == 2) c.m = f.mode[0], c.n = f.mode[1];
  if (f.size.size() == 2) c.a = f.size[0], c.b = f.size[1];
  if (command == "circle" && f.size.empty() && f.preset.empty()) c.a = 2 * nodal::kPi;
  if (f.h) c.h = *f.h;
  if (f.strip_h) c.strip_h = *f.strip_h;
  if (f.k) c.k = *f.k;
  if (!f.direction.empty()) c.direction = f.direction;
  if (!f.t.empty()) c.t = f.t;
  if (f.t0) c.t0 = *f.t0;
  if (!f.out.empty()) c.out = f.out;
  if (f.tol_zero) c.tol_zero = *f.tol_zero;
  if (f.tol_crit) c.tol_crit = *f.tol_crit;
  if (f.seed) c.seed = *f.seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nodal partition stability: DtN spectra, Hessian checks and deformations"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"circle", "equal k-partitions of a circle (closed form)"},
      {"square", "rectangle mode, separable or grid backend"},
      {"grid", "finite-difference backend on a rectangle or torus"},
      {"descent", "curved-strip deformations and the surrogate energy"},
      {"verify", "all backends and identity checks for a case"},
      {"run", "execute a preset or JSON configuration"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags, name == "run");
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig config = resolve(command, flags);
    const nodal::pipeline::Result r = nodal::pipeline::run(config);
    std::cout << "config " << nodal::pipeline::config_hash(config) << " -> " << config.out << "\n"
              << nodal::format_table(r.report);
    if (!r.report.passed()) {
      std::cout << "some checks FAILED\n";
      return 1;
    }
    std::cout << "all checks passed\n";
    return 0;
  } catch (const nodal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
