// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nodal/circle.hpp"
#include "nodal/grid.hpp"
#include "nodal/pipeline.hpp"
#include "nodal/report.hpp"
#include "nodal/separable.hpp"
#include "nodal/strip.hpp"

namespace {

using namespace nodal;

// Tolerances and limits.
constexpr double kSeparableZero = 1e-9;
constexpr double kCircleZero = 1e-12;
constexpr double kZeroModeTol = 1e-8;
constexpr double kGridRelTol = 0.05;
constexpr double kC0 = 10.0;
constexpr double kGapFactor = 10.0;
constexpr double kHessianEigenTol = 0.02;
constexpr double kHessianRandomTol = 0.05;
constexpr double kSimilarityTol = 1e-10;
constexpr double kGridFlipTol = 1e-8;
constexpr double kCircleFlipTol = 1e-12;
constexpr double kAsymmetryFactor = 100.0;
constexpr double kAsymmetryRatio = 0.6;
constexpr double kMinOrder = 1.8;
constexpr double kStripH = 1.0 / 200;
constexpr double kT0 = 1e-2;
constexpr std::uint64_t kSeed = 12345;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "[x] ") << what << "; ";
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double time_limit, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.check(false, std::string("exception: ") + e.what());
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (time_limit > 0) o.check(seconds < time_limit, "runtime " + pipeline::num(seconds) + " s < " + pipeline::num(time_limit) + " s");
  if (!o.pass) ++failures;
  std::printf("%s %2d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), seconds, o.detail.str().c_str());
  std::fflush(stdout);
}

std::string n(double v) { return pipeline::num(v); }

const separable::ModeIndex k31{3, 1, 1.0, 1.0};
const separable::ModeIndex k21{2, 1, 1.0, 1.0};
const separable::ModeIndex r31{3, 1, 1.0, 0.8};

Vector sigmas(const separable::SeparableSpectrum& s) {
  Vector v(s.items.size());
  for (std::size_t k = 0; k < s.items.size(); ++k) v(k) = s.items[k].sigma;
  return v;
}

bool pattern(const Vector& v, int s0, int s1) {
  return v.size() == 2 && std::abs(std::abs(v(0)) - std::abs(v(1))) < 1e-12 && v(0) * s0 > 0 && v(1) * s1 > 0;
}

struct GridCase {
  grid::GridSetup setup;
  grid::GridDtn dtn;
  ModeInfo info;
  SpectralCounts counts;
};

GridCase grid_case(double a, double b, int m, int nn, double h) {
  GridCase c;
  const grid::Grid g = grid::make_grid(Domain::rectangle(a, b), h);
  const grid::ModeCluster cluster = grid::select_mode(g, m, nn);
  c.setup = grid::setup_from_eigenpair(g, cluster.selected);
  std::vector<double> values;
  for (const auto& p : cluster.spectrum) values.push_back(p.value);
  c.info = mode_info_from_spectrum(values, cluster.selected.value, cluster.tolerance, c.setup.nodal.nodal_count, "grid");
  c.dtn = grid::assemble_dtn(c.setup);
  c.counts = count_spectrum(c.dtn.op.spectrum().values, kC0 * h);
  return c;
}

std::string counts_text(const SpectralCounts& c) {
  return "n- = " + std::to_string(c.negative) + ", n0 = " + std::to_string(c.zero) + " (tau " + n(c.threshold) + ")";
}

}  // namespace

int main() {
  const separable::SeparableSpectrum spec31 = separable::dtn_spectrum(k31, 8, kSeparableZero);
  GridCase* g120 = nullptr;

  criterion(1, "separable (3,1) spectrum", 1.0, [&](Outcome& o) {
    const auto s = separable::dtn_spectrum(k31, 8, kSeparableZero);
    o.check(s.negative == 2, "n- = " + std::to_string(s.negative));
    o.check(s.items.size() >= 3 && s.items[0].q == 2 && s.items[1].q == 2, "both negative in q = 2");
    o.check(s.zero == 1 && s.items[2].q == 3 && std::abs(s.items[2].sigma) <= kSeparableZero,
            "one zero in q = 3, |sigma| = " + n(std::abs(s.items[2].sigma)));
    o.check(pattern(s.items[0].values, 1, 1) && pattern(s.items[1].values, 1, -1) && pattern(s.items[2].values, 1, 1),
            "patterns (1,1), (1,-1), (1,1)");
    o.check(s.tail_certified, "tail certified");
    o.detail << "sigma = " << n(s.items[0].sigma) << ", " << n(s.items[1].sigma) << ", " << n(s.items[2].sigma) << "; ";
  });

  criterion(2, "deficiency identity (3,1)", 1.0, [&](Outcome& o) {
    const ModeInfo info = mode_info_rectangle(1.0, 1.0, 3, 1);
    o.check(info.label == 5 && info.nodal_count == 3 && info.deficiency == 2,
            "(l, nu, delta) = (" + std::to_string(info.label) + ", " + std::to_string(info.nodal_count) + ", " +
                std::to_string(info.deficiency) + ")");
    const IdentityReport r = verify_identities(count_spectrum(sigmas(spec31), kSeparableZero), info, true);
    o.check(r.passed(), "identities n- = delta, n0 = multiplicity - 1");
  });

  criterion(3, "zero-mode closed form", 0.0, [&](Outcome& o) {
    const separable::StripSetup setup = separable::strip_setup(k31, 200);
    const separable::Reconstruction rec = separable::reconstruct_eigenfunctions(spec31.items[2], setup);
    const auto& nodes = setup.traces.mesh.nodes;
    Vector ref(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
      ref(k) = std::sqrt(3.0) / (6 * kPi) * std::sin(3 * kPi * nodes[k].y) / std::sin(kPi * nodes[k].y);
    const Vector w = setup.traces.mesh.weights().cwiseProduct(setup.rho.values.cwiseAbs2());
    auto normalize = [&](Vector v) { return Vector(v / std::sqrt(v.dot(w.cwiseProduct(v)))); };
    Vector phi = normalize(rec.phi);
    const Vector r = normalize(ref);
    if (phi.dot(w.cwiseProduct(r)) < 0) phi = -phi;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < r.size(); ++k) worst = std::max(worst, std::abs(phi(k) - r(k)) / std::abs(r(k)));
    o.check(worst <= kZeroModeTol, "max relative pointwise error " + n(worst));
  });

  criterion(4, "grid cross-validation h = 1/120", 300.0, [&](Outcome& o) {
    g120 = new GridCase(grid_case(1.0, 1.0, 3, 1, 1.0 / 120));
    const Vector e = g120->dtn.op.spectrum().values;
    for (int k : {0, 1}) {
      const double rel = std::abs(e(k) - spec31.items[k].sigma) / std::abs(spec31.items[k].sigma);
      o.check(rel <= kGridRelTol, "sigma" + std::to_string(k + 1) + " = " + n(e(k)) + " (rel " + n(rel) + ")");
    }
    const SpectralCounts& c = g120->counts;
    o.check(c.negative == 2 && c.zero == 1, counts_text(c));
    o.check(c.nearest_nonzero > kGapFactor * c.threshold, "nearest nonzero " + n(c.nearest_nonzero));
  });

  criterion(5, "Courant-sharp (2,1)", 0.0, [&](Outcome& o) {
    const ModeInfo info = mode_info_rectangle(1.0, 1.0, 2, 1);
    o.check(info.deficiency == 0, "delta = " + std::to_string(info.deficiency));
    const auto s = separable::dtn_spectrum(k21, 8, kSeparableZero);
    o.check(s.negative == 0 && s.zero == 1,
            "separable n- = " + std::to_string(s.negative) + ", n0 = " + std::to_string(s.zero));
    const GridCase g = grid_case(1.0, 1.0, 2, 1, 1.0 / 120);
    o.check(g.info.deficiency == 0, "grid delta = " + std::to_string(g.info.deficiency));
    o.check(g.counts.negative == 0 && g.counts.zero == 1, "grid " + counts_text(g.counts));
  });

  criterion(6, "simple eigenvalue 1 x 0.8 (3,1)", 0.0, [&](Outcome& o) {
    const ModeInfo info = mode_info_rectangle(1.0, 0.8, 3, 1);
    o.check(info.deficiency == 2 && info.multiplicity == 1,
            "delta = " + std::to_string(info.deficiency) + ", multiplicity " + std::to_string(info.multiplicity));
    const auto s = separable::dtn_spectrum(r31, 8, kSeparableZero);
    o.check(s.negative == 2 && s.zero == 0,
            "separable n- = " + std::to_string(s.negative) + ", n0 = " + std::to_string(s.zero));
    const GridCase g = grid_case(1.0, 0.8, 3, 1, 1.0 / 120);
    o.check(g.info.multiplicity == 1 && g.info.deficiency == 2, "grid multiplicity and delta");
    o.check(g.counts.negative == 2 && g.counts.zero == 0, "grid " + counts_text(g.counts));
  });

  strip::DeformationFamily* phi1 = nullptr;
  criterion(7, "Hessian identity h = 1/200", 600.0, [&](Outcome& o) {
    const separable::StripSetup setup = separable::strip_setup(k31, 200);
    strip::StripOptions opts;
    opts.h = kStripH;
    const double tau = kC0 * kStripH;
    for (const std::string d : {"1", "random", "3"}) {
      pipeline::RunConfig c;
      c.direction = d;
      c.seed = kSeed;
      const pipeline::Direction dir = pipeline::direction_of(c, setup);
      auto* fam = new strip::DeformationFamily(dir.family, setup.coefficients.a.values, opts);
      const strip::HessianCheck h = strip::hessian_check(*fam, dir.quad_form, kT0);
      const std::string vals = "L'' = " + n(h.second_5pt) + ", Q = " + n(dir.quad_form);
      if (d == "1") {
        o.check(h.discrepancy <= kHessianEigenTol, "phi1 " + vals + ", discrepancy " + n(h.discrepancy));
        phi1 = fam;
      } else if (d == "random") {
        o.check(h.discrepancy <= kHessianRandomTol, "random " + vals + ", discrepancy " + n(h.discrepancy));
        delete fam;
      } else {
        o.check(std::abs(h.second_5pt) <= tau && std::abs(dir.quad_form) <= tau, "phi3 " + vals + " (tau " + n(tau) + ")");
        delete fam;
      }
    }
  });

  criterion(8, "circle oracle k = 3, 4", 0.0, [&](Outcome& o) {
    for (int k : {3, 4}) {
      const circle::CircleDtn d = circle::circle_dtn(circle::equal_partition(2 * kPi, k));
      const double lmax = d.op.dimension() ? d.op.matrix.cwiseAbs().maxCoeff() : 0.0;
      o.check(d.subspace.dimension() == 1 && lmax <= kCircleZero,
              "k = " + std::to_string(k) + ": dim S = " + std::to_string(d.subspace.dimension()) + ", |Lambda| = " + n(lmax));
      if (k == 4) {
        const IdentityReport r = verify_identities(count_spectrum(d.op.spectrum().values, kCircleZero),
                                                   mode_info_circle(2 * kPi, 4), true);
        o.check(r.passed(), "k = 4 identities n- = delta = 0, n0 = 1");
      }
    }
  });

  criterion(9, "structural properties", 0.0, [&](Outcome& o) {
    const GridCase g60 = grid_case(1.0, 1.0, 3, 1, 1.0 / 60);
    if (!g120) g120 = new GridCase(grid_case(1.0, 1.0, 3, 1, 1.0 / 120));
    const double a60 = g60.dtn.op.asymmetry, a120 = g120->dtn.op.asymmetry;
    o.check(a60 <= kAsymmetryFactor / 60 && a120 <= kAsymmetryFactor / 120,
            "asymmetry " + n(a60) + " (h = 1/60), " + n(a120) + " (h = 1/120) <= 100 h");
    o.check(a120 <= kAsymmetryRatio * a60, "asymmetry ratio " + n(a60 > 0 ? a120 / a60 : INFINITY) + " <= 0.6");

    grid::GridSetup flipped = g120->setup;
    flipped.nodal.partition = flip_orientation(flipped.nodal.partition, 1);
    const Vector base = g120->dtn.op.spectrum().values, flip = grid::assemble_dtn(flipped).op.spectrum().values;
    const double grid_flip = (base - flip).cwiseAbs().maxCoeff() / base.cwiseAbs().maxCoeff();
    o.check(grid_flip <= kGridFlipTol, "grid flip " + n(grid_flip));

    double circle_flip = 0.0;
    for (int k : {3, 4}) {
      const auto cp = circle::equal_partition(2 * kPi, k);
      const Vector ref = circle::circle_dtn(cp).op.spectrum().values;
      for (int mask = 0; mask < (1 << k); ++mask) {
        std::vector<int> orient(k);
        for (int i = 0; i < k; ++i) orient[i] = (mask >> i) & 1 ? -1 : 1;
        const Vector v = circle::circle_dtn(cp, orient).op.spectrum().values;
        circle_flip = std::max(circle_flip, v.size() == ref.size() ? (v - ref).cwiseAbs().maxCoeff() : INFINITY);
      }
    }
    o.check(circle_flip <= kCircleFlipTol, "circle flip " + n(circle_flip));

    const double grid_sim = hessian_similarity_defect(hessian_operator(g120->dtn.op, g120->setup.rho.values));
    const separable::StripSetup setup = separable::strip_setup(k31, 200);
    const DtnOperator sep = separable::separable_dtn_operator(setup);
    const SubspaceBasis f = tangent_basis(setup.partition, setup.traces, &setup.rho.values);
    const double sep_sim = hessian_similarity_defect(hessian_operator(sep, setup.rho.values, &f.basis));
    o.check(std::max(grid_sim, sep_sim) <= kSimilarityTol, "eig H = 2 eig Lambda: " + n(grid_sim) + " (grid), " + n(sep_sim) + " (separable)");

    std::vector<double> err;
    for (double inv : {30.0, 60.0, 120.0}) {
      strip::StripOptions opts;
      opts.h = 1 / inv;
      err.push_back(std::abs(strip::strip_lambda1(strip::constant_curve(0.0), strip::constant_curve(1.0 / 3), opts) -
                             10 * kPi * kPi));
    }
    const double order = std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));
    o.check(order >= kMinOrder, "strip order " + n(order));
  });

  criterion(10, "descent geometry", 0.0, [&](Outcome& o) {
    if (!phi1) {
      const separable::StripSetup setup = separable::strip_setup(k31, 200);
      strip::StripOptions opts;
      opts.h = kStripH;
      phi1 = new strip::DeformationFamily(strip::family_from_item(setup, spec31.items[0]), setup.coefficients.a.values, opts);
    }
    const double lo = strip::gap(phi1->family, 0, 0.25, 0.1), hi = strip::gap(phi1->family, 0, 0.75, 0.1);
    o.check(hi > 1.0 / 3 && lo < 1.0 / 3, "gap(0.75) = " + n(hi) + ", gap(0.25) = " + n(lo));
    const double l0 = strip::surrogate_energy(*phi1, 0.0), l2 = strip::surrogate_energy(*phi1, 0.02);
    o.check(l2 < l0, "L(0.02) - L(0) = " + n(l2 - l0));
  });

  delete g120;
  delete phi1;
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
