#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nodal/circle.hpp"
#include "nodal/error.hpp"
#include "nodal/grid.hpp"
#include "nodal/partition_io.hpp"
#include "nodal/report.hpp"
#include "nodal/separable.hpp"
#include "nodal/strip.hpp"

// Experiment orchestration: resolved configuration, presets, and the circle,
// square (separable or grid), grid, descent and verify pipelines with their
// CSV, geometry and report outputs.

namespace nodal::pipeline {

using Json = nlohmann::json;

struct RunConfig {
  std::string command = "verify";  // circle | square | grid | descent | verify
  std::string preset;
  std::string backend = "separable";  // square: separable | grid
  std::string domain = "rectangle";   // rectangle | torus (grid), circle
  double a = 1.0;                     // width, or circumference for a circle
  double b = 1.0;
  int m = 3;
  int n = 1;
  double h = 1.0 / 120;        // grid spacing
  double strip_h = 1.0 / 200;  // strip-mapped spacing
  int k = 3;                   // circle arcs
  std::string direction = "1";  // 1, 2, 3 (spectrum item) or random
  std::vector<double> t{0.0, 0.1};
  double t0 = 1e-2;
  std::string out = "out";
  double tol_zero = 10.0;       // zero threshold C0 h on the grid
  double tol_crit = 50.0;       // criticality tolerance in units of h
  double cluster_factor = 20.0; // cluster tolerance factor times h^2 lambda
  std::uint64_t seed = 12345;
  int q_max = 8;
};

inline Json to_json(const RunConfig& c) {
  return Json{{"command", c.command}, {"preset", c.preset},     {"backend", c.backend},
              {"domain", c.domain},   {"a", c.a},               {"b", c.b},
              {"m", c.m},             {"n", c.n},               {"h", c.h},
              {"strip_h", c.strip_h}, {"k", c.k},               {"direction", c.direction},
              {"t", c.t},             {"t0", c.t0},             {"out", c.out},
              {"tol_zero", c.tol_zero}, {"tol_crit", c.tol_crit}, {"cluster_factor", c.cluster_factor},
              {"seed", c.seed},       {"q_max", c.q_max}};
}

/// Overwrites fields named in `j`; unknown keys are an InvalidConfig error.
inline void apply_json(RunConfig& c, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "command") c.command = value.get<std::string>();
      else if (key == "preset") c.preset = value.get<std::string>();
      else if (key == "backend") c.backend = value.get<std::string>();
      else if (key == "domain") c.domain = value.get<std::string>();
      else if (key == "a") c.a = value.get<double>();
      else if (key == "b") c.b = value.get<double>();
      else if (key == "m") c.m = value.get<int>();
      else if (key == "n") c.n = value.get<int>();
      else if (key == "h") c.h = value.get<double>();
      else if (key == "strip_h") c.strip_h = value.get<double>();
      else if (key == "k") c.k = value.get<int>();
      else if (key == "direction") c.direction = value.is_string() ? value.get<std::string>() : value.dump();
      else if (key == "t") c.t = value.get<std::vector<double>>();
      else if (key == "t0") c.t0 = value.get<double>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "tol_zero") c.tol_zero = value.get<double>();
      else if (key == "tol_crit") c.tol_crit = value.get<double>();
      else if (key == "cluster_factor") c.cluster_factor = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "q_max") c.q_max = value.get<int>();
      else throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + key + "'");
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "bad value for '" + key + "': " + e.what());
    }
  }
}

/// Preset values; the command is set only when `set_command` is true.
inline void apply_preset(RunConfig& c, const std::string& name, bool set_command = true) {
  RunConfig p;
  p.out = c.out;
  p.preset = name;
  if (name == "square-31") {
    p.m = 3, p.n = 1;
  } else if (name == "square-21") {
    p.m = 2, p.n = 1;
  } else if (name == "rect-08-31") {
    p.m = 3, p.n = 1, p.b = 0.8;
  } else if (name == "circle-3" || name == "circle-4") {
    p.domain = "circle", p.a = 2 * kPi, p.k = name == "circle-3" ? 3 : 4;
  } else if (name == "hessian-check-31") {
    p.m = 3, p.n = 1, p.direction = "1";
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
  }
  if (!set_command) p.command = c.command;
  c = p;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"square-31", "square-21", "rect-08-31",
                                              "circle-3",  "circle-4",  "hessian-check-31"};
  return names;
}

inline void validate(const RunConfig& c) {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  const std::vector<std::string> commands{"circle", "square", "grid", "descent", "verify"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    bad("unknown command '" + c.command + "'");
  if (c.backend != "separable" && c.backend != "grid") bad("backend must be separable or grid");
  if (c.domain != "rectangle" && c.domain != "torus" && c.domain != "circle") bad("unknown domain '" + c.domain + "'");
  for (auto [name, v] : std::initializer_list<std::pair<const char*, double>>{{"tol_zero", c.tol_zero}, {"tol_crit", c.tol_crit},
                         {"cluster_factor", c.cluster_factor}, {"t0", c.t0}, {"h", c.h}, {"strip_h", c.strip_h}})
    if (!(v > 0.0)) bad(std::string(name) + " must be positive");
  if (!(c.a > 0.0) || !(c.b > 0.0)) bad("domain lengths must be positive");
  if (c.m < 1 || c.n < 1) bad("mode indices must be at least 1");
  if (c.k < 2) bad("circle partitions need k >= 2");
  if (c.q_max < 1) bad("q_max must be at least 1");
  const bool uses_grid = c.command == "grid" || (c.command == "square" && c.backend == "grid") ||
                         (c.command == "verify" && c.domain != "circle");
  if (uses_grid && c.h > 1.0 / 30 + 1e-12) bad("h = " + std::to_string(c.h) + " is too coarse for the grid backend (need h <= 1/30)");
  if (c.direction != "1" && c.direction != "2" && c.direction != "3" && c.direction != "random")
    bad("direction must be 1, 2, 3 or random");
  if (c.t.empty()) bad("t list must not be empty");
}

/// 64-bit FNV-1a of the config JSON without the output directory, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  Json j = to_json(c);
  j.erase("out");
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Output directory whose files all start with the config hash.
class Outputs {
 public:
  Outputs(const RunConfig& c, std::filesystem::path dir) : dir_(std::move(dir)), hash_(config_hash(c)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& written() const { return written_; }

  void csv(const std::string& name, const std::string& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    os << "# config " << hash_ << "\n" << header << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    text(name, os.str(), false);
  }

  void text(const std::string& name, const std::string& body, bool with_header = true) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    if (with_header) f << "# config " << hash_ << "\n";
    f << body;
    written_.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::string> written_;
};

/// Outcome of one pipeline: checks plus machine-readable results.
struct Result {
  IdentityReport report;
  Json data = Json::object();

  void merge(const std::string& prefix, const Result& r) {
    for (const auto& e : r.report.entries) report.entries.push_back({prefix + "/" + e.name, e.passed, e.asserted, e.detail});
    data[prefix] = r.data;
  }
};

inline Json counts_json(const SpectralCounts& c) {
  return Json{{"negative", c.negative},
              {"zero", c.zero},
              {"dimension", c.dimension},
              {"threshold", c.threshold},
              {"zero_band_max", c.zero_band_max},
              {"nearest_nonzero", std::isfinite(c.nearest_nonzero) ? Json(c.nearest_nonzero) : Json(nullptr)},
              {"stable_at_half", c.stable_at_half},
              {"eigenvalues", c.eigenvalues}};
}

inline Json info_json(const ModeInfo& i) {
  return Json{{"lambda", i.lambda},     {"multiplicity", i.multiplicity},
              {"label", i.label},       {"nodal_count", i.nodal_count},
              {"deficiency", i.deficiency}, {"cluster_tolerance", i.cluster_tolerance},
              {"source", i.source}};
}

inline std::vector<std::vector<std::string>> spectrum_rows(const Vector& values) {
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < values.size(); ++i) rows.push_back({std::to_string(i), num(values(i))});
  return rows;
}

// ---------------------------------------------------------------------------

inline Result run_circle(const RunConfig& c, Outputs& out) {
  Result r;
  const auto cp = circle::equal_partition(c.a, c.k);
  const circle::CircleDtn d = circle::circle_dtn(cp);
  const SymmetricEigen e = d.op.spectrum();
  const double lambda_max = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
  const SpectralCounts counts = count_spectrum(e.values, 1e-12);
  const bool bipartite = check_bipartite(d.partition).has_value();
  std::optional<ModeInfo> info;
  if (c.k % 2 == 0) info = mode_info_circle(c.a, c.k);
  const CoefficientFit fit = solve_coefficients(d.partition, d.traces);
  const WeightRho rho = compute_rho(d.partition, fit.a, d.traces);
  const HessianOperator hess = hessian_operator(d.op, rho.values);
  const double defect = hessian_similarity_defect(hess);
  r.report = verify_identities(counts, info, bipartite, defect);
  r.report.add("dim-S", d.subspace.dimension() == 1, "dim S = " + std::to_string(d.subspace.dimension()));
  r.report.add("lambda-zero", lambda_max <= 1e-12, "max |Lambda| = " + num(lambda_max));
  const circle::TangentCheck tc = circle::circle_tangent_check(cp);
  r.report.add("tangent-rotation", tc.matches, "alignment " + num(tc.alignment));
  r.data = Json{{"k", c.k},
                {"circumference", c.a},
                {"dim_S", d.subspace.dimension()},
                {"constraint_rank", d.subspace.rank},
                {"lambda_max_abs", lambda_max},
                {"bipartite", bipartite},
                {"coefficients", std::vector<double>(fit.a.values.data(), fit.a.values.data() + fit.a.values.size())},
                {"rho", rho.values.size() ? rho.values(0) : 0.0},
                {"counts", counts_json(counts)},
                {"hessian_similarity_defect", defect}};
  if (info) r.data["mode"] = info_json(*info);
  out.csv("circle_spectrum.csv", "index,sigma", spectrum_rows(e.values));
  out.text("partition.txt", partition_to_string(d.partition));
  return r;
}

inline separable::ModeIndex mode_of(const RunConfig& c) { return {c.m, c.n, c.a, c.b}; }

inline int strip_rows(const RunConfig& c) { return std::max(4, static_cast<int>(std::lround(c.b / c.strip_h))); }

inline Result run_separable(const RunConfig& c, Outputs& out) {
  Result r;
  const separable::ModeIndex mode = mode_of(c);
  const separable::SeparableSpectrum spec =
      separable::dtn_spectrum(mode, std::max(c.q_max, separable::evanescent_cutoff(mode)));
  Vector sigma(spec.items.size());
  for (std::size_t k = 0; k < spec.items.size(); ++k) sigma(k) = spec.items[k].sigma;
  const SpectralCounts counts = count_spectrum(sigma, spec.zero_threshold);
  const ModeInfo info = mode_info_rectangle(c.a, c.b, c.m, c.n);

  const separable::StripSetup setup = separable::strip_setup(mode, strip_rows(c));
  std::optional<double> defect;
  if (mode.interface_count() > 0) {
    const DtnOperator op = separable::separable_dtn_operator(setup);
    const SubspaceBasis f = tangent_basis(setup.partition, setup.traces, &setup.rho.values);
    defect = f.dimension() == op.dimension()
                 ? hessian_similarity_defect(hessian_operator(op, setup.rho.values, &f.basis))
                 : std::numeric_limits<double>::infinity();
  }
  r.report = verify_identities(counts, info, true, defect);
  r.report.add("tail", spec.tail_certified, "blocks beyond q = " + std::to_string(spec.q_max) + " certified positive");

  std::vector<std::vector<std::string>> rows, eig_rows;
  Json items = Json::array();
  for (std::size_t k = 0; k < spec.items.size(); ++k) {
    const auto& it = spec.items[k];
    std::vector<std::string> row{std::to_string(k), std::to_string(it.q), num(it.sigma)};
    std::vector<double> g(it.values.data(), it.values.data() + it.values.size());
    for (double v : g) row.push_back(num(v));
    rows.push_back(row);
    items.push_back(Json{{"q", it.q}, {"sigma", it.sigma}, {"values", g}});
    if (k < 3 && mode.interface_count() > 0) {
      const separable::Reconstruction rec = separable::reconstruct_eigenfunctions(it, setup);
      for (int p = 0; p < setup.traces.mesh.size(); ++p) {
        const auto& node = setup.traces.mesh.nodes[p];
        eig_rows.push_back({std::to_string(k), std::to_string(node.interface), num(node.y), num(rec.f(p)), num(rec.phi(p))});
      }
    }
  }
  std::string header = "index,q,sigma";
  for (int i = 0; i < mode.interface_count(); ++i) header += ",g" + std::to_string(i + 1);
  out.csv("separable_spectrum.csv", header, rows);
  if (!eig_rows.empty()) out.csv("separable_eigenfunctions.csv", "item,interface,y,f,phi", eig_rows);
  out.text("separable_partition.txt", partition_to_string(setup.partition));

  r.data = Json{{"mode", info_json(info)},
                {"q_max", spec.q_max},
                {"items", items},
                {"counts", counts_json(counts)},
                {"coefficients", std::vector<double>(setup.coefficients.a.values.data(),
                                                     setup.coefficients.a.values.data() + setup.coefficients.a.values.size())},
                {"rho_amplitude", setup.rho_amplitude},
                {"hessian_similarity_defect", defect ? Json(*defect) : Json(nullptr)}};
  return r;
}

inline Result run_grid(const RunConfig& c, Outputs& out) {
  Result r;
  grid::GridSetup setup;
  std::optional<ModeInfo> info;
  double cluster_tol = 0.0;
  if (c.domain == "torus") {
    setup = grid::torus_three_strips(c.a, c.b, c.h);
  } else {
    const grid::Grid g = grid::make_grid(Domain::rectangle(c.a, c.b), c.h);
    const grid::ModeCluster cluster = grid::select_mode(g, c.m, c.n, c.cluster_factor);
    setup = grid::setup_from_eigenpair(g, cluster.selected, c.tol_crit * c.h);
    std::vector<double> values;
    for (const auto& p : cluster.spectrum) values.push_back(p.value);
    cluster_tol = cluster.tolerance;
    info = mode_info_from_spectrum(values, cluster.selected.value, cluster.tolerance, setup.nodal.nodal_count,
                                   "grid eigensolve");
  }
  const bool bipartite = check_bipartite(setup.partition()).has_value();
  const double tau = c.tol_zero * c.h;
  const grid::GridDtn dtn = grid::assemble_dtn(setup);
  const SymmetricEigen e = dtn.op.spectrum();
  const SpectralCounts counts = count_spectrum(e.values, tau);
  std::optional<double> defect;
  if (!setup.partition().interfaces.empty())
    defect = hessian_similarity_defect(hessian_operator(dtn.op, setup.rho.values));
  r.report = verify_identities(counts, info, bipartite, defect);
  if (counts.dimension > counts.negative + counts.zero)
    r.report.add("zero-gap", counts.nearest_nonzero > 10 * tau,
                 "nearest nonzero " + num(counts.nearest_nonzero) + " vs 10 tau = " + num(10 * tau));

  out.csv("grid_spectrum.csv", "index,sigma", spectrum_rows(e.values));
  std::vector<std::vector<std::string>> rho_rows;
  for (int p = 0; p < setup.traces.mesh.size() && p < setup.rho.values.size(); ++p) {
    const auto& node = setup.traces.mesh.nodes[p];
    rho_rows.push_back({std::to_string(node.interface), num(node.x), num(node.y), num(setup.rho.values(p))});
  }
  out.csv("grid_rho.csv", "interface,x,y,rho", rho_rows);
  out.text("grid_partition.txt", partition_to_string(setup.partition()));

  r.data = Json{{"h", c.h},
                {"lambda", setup.lambda},
                {"nodal_count", setup.nodal.nodal_count},
                {"bipartite", bipartite},
                {"tau", tau},
                {"cluster_tolerance", cluster_tol},
                {"criticality_tolerance", setup.criticality_tolerance},
                {"criticality_residual", setup.coefficients.residual},
                {"dim_S", dtn.subspace.dimension()},
                {"constraint_rank", dtn.subspace.rank},
                {"asymmetry", dtn.op.asymmetry},
                {"max_defect", dtn.max_defect},
                {"counts", counts_json(counts)},
                {"hessian_similarity_defect", defect ? Json(*defect) : Json(nullptr)}};
  if (info) r.data["mode"] = info_json(*info);
  return r;
}

/// The deformation direction named by the config, with its DtN value 2 <Lambda f, f>.
struct Direction {
  strip::StripFamily family;
  double quad_form = 0.0;  // node-space pairing with the separable operator
  double series_quad_form = 0.0;
  std::string kind;  // eigen or random
  double sigma = 0.0;
};

inline Direction direction_of(const RunConfig& c, const separable::StripSetup& setup) {
  Direction d;
  if (c.direction == "random") {
    d.family = strip::random_family(setup, c.seed);
    d.kind = "random";
  } else {
    const auto spec = separable::dtn_spectrum(setup.mode, std::max(c.q_max, separable::evanescent_cutoff(setup.mode)));
    const std::size_t item = std::stoul(c.direction) - 1;
    if (item >= spec.items.size())
      throw Error(ErrorCode::InvalidArgument, "direction " + c.direction + " exceeds the spectrum size");
    d.family = strip::family_from_item(setup, spec.items[item]);
    d.kind = "eigen";
    d.sigma = spec.items[item].sigma;
  }
  const DtnOperator op = separable::separable_dtn_operator(setup);
  Vector f(setup.traces.mesh.size());
  for (int p = 0; p < f.size(); ++p) {
    const auto& node = setup.traces.mesh.nodes[p];
    f(p) = d.family.f.value(node.interface, node.y);
  }
  d.quad_form = 2.0 * op.mesh.dot(f, op.apply(f));
  d.series_quad_form = 2.0 * d.family.f.quadratic_form();
  return d;
}

inline Result run_descent(const RunConfig& c, Outputs& out) {
  Result r;
  if (c.n != 1) throw Error(ErrorCode::UnsupportedGeometry, "strip deformations need vertical strips (n = 1)");
  if (c.m < 2) throw Error(ErrorCode::InvalidArgument, "strip deformations need at least one interface");
  const separable::ModeIndex mode = mode_of(c);
  const separable::StripSetup setup = separable::strip_setup(mode, strip_rows(c));
  const Direction dir = direction_of(c, setup);
  strip::StripOptions opts;
  opts.h = c.strip_h;
  strip::DeformationFamily fam(dir.family, setup.coefficients.a.values, opts);

  const double tau = c.tol_zero * c.strip_h;
  const strip::HessianCheck hc = strip::hessian_check(fam, dir.quad_form, c.t0);
  const double l0 = hc.values[2];
  r.report.add("energy-at-zero", std::abs(l0 - mode.eigenvalue()) <= 10 * c.strip_h * c.strip_h * mode.eigenvalue(),
               "L(0) = " + num(l0) + ", lambda* = " + num(mode.eigenvalue()));
  r.report.add("first-variation", std::abs(hc.first) <= 10 * c.t0 * c.t0 + 10 * c.strip_h * c.strip_h,
               "L'(0) = " + num(hc.first));
  if (std::abs(dir.quad_form) <= tau) {
    r.report.add("hessian", std::abs(hc.second_5pt) <= tau,
                 "flat direction: |L''(0)| = " + num(std::abs(hc.second_5pt)) + ", |Q| = " + num(std::abs(dir.quad_form)) +
                     ", tau = " + num(tau));
  } else {
    const double tol = dir.kind == "random" ? 0.05 : 0.02;
    r.report.add("hessian", hc.discrepancy <= tol,
                 "L''(0) = " + num(hc.second_5pt) + ", Q = " + num(dir.quad_form) + ", discrepancy " +
                     num(hc.discrepancy) + " (tolerance " + num(tol) + ")");
  }
  if (dir.quad_form < -tau) {
    const double l2 = strip::surrogate_energy(fam, 2 * c.t0);
    r.report.add("descent", l2 < l0, "L(" + num(2 * c.t0) + ") - L(0) = " + num(l2 - l0));
  }

  const auto snaps = strip::emit_deformation(dir.family, c.t);
  std::vector<std::vector<std::string>> geo, energy;
  Json gaps = Json::array();
  for (const auto& s : snaps) {
    for (std::size_t i = 0; i < s.interfaces.size(); ++i)
      for (const auto& pt : s.interfaces[i]) geo.push_back({num(s.t), std::to_string(i), num(pt.y), num(pt.x)});
    energy.push_back({num(s.t), num(strip::surrogate_energy(fam, s.t))});
    if (mode.interface_count() >= 2)
      gaps.push_back(Json{{"t", s.t}, {"gap_025", strip::gap(dir.family, 0, 0.25, s.t)},
                          {"gap_075", strip::gap(dir.family, 0, 0.75, s.t)}});
  }
  out.csv("geometry.csv", "t,interface,y,x", geo);
  out.csv("energy.csv", "t,L", energy);

  r.data = Json{{"direction", c.direction},
                {"kind", dir.kind},
                {"sigma", dir.sigma},
                {"strip_h", c.strip_h},
                {"t0", c.t0},
                {"tau", tau},
                {"stencil", std::vector<double>(hc.values.begin(), hc.values.end())},
                {"second_3pt", hc.second_3pt},
                {"second_5pt", hc.second_5pt},
                {"first", hc.first},
                {"quad_form", dir.quad_form},
                {"series_quad_form", dir.series_quad_form},
                {"discrepancy", hc.discrepancy},
                {"gaps", gaps}};
  return r;
}

/// Runs the configured command and writes report.json and report.txt.
inline Result run(const RunConfig& config) {
  validate(config);
  Outputs out(config, config.out);
  Result r;
  const std::string& cmd = config.command;
  if (cmd == "circle" || (cmd == "verify" && config.domain == "circle")) {
    r.merge("circle", run_circle(config, out));
  } else if (cmd == "square") {
    r.merge(config.backend, config.backend == "grid" ? run_grid(config, out) : run_separable(config, out));
  } else if (cmd == "grid") {
    r.merge("grid", run_grid(config, out));
  } else if (cmd == "descent") {
    r.merge("strip", run_descent(config, out));
  } else {  // verify
    r.merge("separable", run_separable(config, out));
    r.merge("grid", run_grid(config, out));
    if (config.n == 1 && config.m >= 2) {
      if (config.preset == "hessian-check-31") {
        for (const std::string d : {"1", "3", "random"}) {
          RunConfig c = config;
          c.direction = d;
          c.t = {0.0};
          Outputs sub(c, std::filesystem::path(config.out) / ("strip-" + d));
          r.merge("strip-" + d, run_descent(c, sub));
        }
      } else {
        r.merge("strip", run_descent(config, out));
      }
    }
  }
  Json doc{{"config", to_json(config)},
           {"config_hash", out.hash()},
           {"passed", r.report.passed()},
           {"results", r.data},
           {"checks", Json::array()}};
  for (const auto& e : r.report.entries)
    doc["checks"].push_back(Json{{"name", e.name}, {"passed", e.passed}, {"asserted", e.asserted}, {"detail", e.detail}});
  out.text("report.json", doc.dump(2) + "\n", false);
  std::ostringstream txt;
  txt << "config " << to_json(config).dump() << "\n\n" << format_table(r.report) << "\n"
      << (r.report.passed() ? "all checks passed" : "some checks FAILED") << "\n";
  out.text("report.txt", txt.str());
  return r;
}

}  // namespace nodal::pipeline
