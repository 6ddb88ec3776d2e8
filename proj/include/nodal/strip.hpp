#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nodal/error.hpp"
#include "nodal/linalg.hpp"
#include "nodal/partition.hpp"
#include "nodal/separable.hpp"

// Vertical strips {left(y) < x < right(y)}, 0 < y < height, mapped to the unit
// reference strip by x = left(y) + xi * width(y). The Dirichlet form in (xi, y)
// is discretized in divergence form on edges and cells with a lumped mass, so
// straight strips reduce exactly to the five-point Laplacian.

namespace nodal::strip {

using Curve = std::function<double(double)>;  // x as a function of y

struct StripOptions {
  double h = 1.0 / 200.0;  // spacing in y
  double height = 1.0;
  int n_xi = 0;            // cells across the strip; 0 picks round(mean width / h)
  SparseEigenOptions eigen{};
};

/// Curve values on the half-step grid y_k = k hy / 2, k = 0..2 ny.
inline std::vector<double> half_step_samples(const Curve& c, int ny, double hy) {
  std::vector<double> v(2 * ny + 1);
  for (int k = 0; k <= 2 * ny; ++k) v[k] = c(0.5 * k * hy);
  return v;
}

struct StripOperator {
  SparseMatrix stiffness;
  Vector mass;  // lumped
  int n_xi = 0;
  int n_y = 0;
};

inline StripOperator strip_operator(const Curve& left, const Curve& right, const StripOptions& opts) {
  const int ny = static_cast<int>(std::lround(opts.height / opts.h));
  if (ny < 4 || std::abs(ny * opts.h - opts.height) > 1e-12 * opts.height)
    throw Error(ErrorCode::InvalidArgument, "strip height must be a multiple of h");
  const double hy = opts.height / ny;
  const std::vector<double> l = half_step_samples(left, ny, hy);
  const std::vector<double> r = half_step_samples(right, ny, hy);
  std::vector<double> w(l.size());
  for (std::size_t k = 0; k < l.size(); ++k) {
    w[k] = r[k] - l[k];
    if (!(w[k] > 0.0))
      throw Error(ErrorCode::OrderingViolation, "strip width is not positive at y = " + std::to_string(0.5 * k * hy));
  }
  int nxi = opts.n_xi;
  if (nxi <= 0) {
    double mean = 0.0;
    for (double v : w) mean += v / w.size();
    nxi = std::max(4, static_cast<int>(std::lround(mean / opts.h)));
  }
  const double hxi = 1.0 / nxi;

  // Derivatives at half-step index k from the neighbors k +- 1 (spacing hy).
  auto deriv = [&](const std::vector<double>& c, int k) { return (c[k + 1] - c[k - 1]) / hy; };

  const int cols = nxi - 1, rows = ny - 1;
  auto id = [&](int i, int j) -> int {
    if (i <= 0 || i >= nxi || j <= 0 || j >= ny) return -1;
    return (j - 1) * cols + (i - 1);
  };
  std::vector<Triplet> t;
  auto add = [&](int p, int q, double v) {
    if (p >= 0 && q >= 0) t.emplace_back(p, q, v);
  };
  // c * (v_p - v_q)^2
  auto add_difference = [&](int p, int q, double c) {
    add(p, p, c);
    add(q, q, c);
    add(p, q, -c);
    add(q, p, -c);
  };

  // Edges in xi at row j: coefficient w (1/w^2 + xi_y^2) hy / hxi.
  for (int j = 1; j < ny; ++j) {
    const int k = 2 * j;
    const double wj = w[k], lp = deriv(l, k), wp = deriv(w, k);
    for (int i = 0; i < nxi; ++i) {
      const double xi = (i + 0.5) * hxi;
      const double xi_y = -(lp + xi * wp) / wj;
      add_difference(id(i, j), id(i + 1, j), wj * (1.0 / (wj * wj) + xi_y * xi_y) * hy / hxi);
    }
  }
  // Edges in y at column i: coefficient w(y_{j+1/2}) hxi / hy.
  for (int i = 1; i < nxi; ++i)
    for (int j = 0; j < ny; ++j) add_difference(id(i, j), id(i, j + 1), w[2 * j + 1] * hxi / hy);
  // Cells: 2 (w xi_y) D_xi v D_y v hxi hy with cell-averaged differences.
  for (int j = 0; j < ny; ++j) {
    const int k = 2 * j + 1;
    const double lp = (l[k + 1] - l[k - 1]) / hy, wp = (w[k + 1] - w[k - 1]) / hy;
    for (int i = 0; i < nxi; ++i) {
      const double xi = (i + 0.5) * hxi;
      const double c = -(lp + xi * wp);  // w xi_y
      if (c == 0.0) continue;
      const int corner[4] = {id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)};
      const double dxi[4] = {-1, 1, -1, 1};  // times 1 / (2 hxi)
      const double dy[4] = {-1, -1, 1, 1};   // times 1 / (2 hy)
      const double scale = 2.0 * c * hxi * hy / (4.0 * hxi * hy);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) add(corner[p], corner[q], scale * 0.5 * (dxi[p] * dy[q] + dy[p] * dxi[q]));
    }
  }
  StripOperator op;
  op.n_xi = nxi;
  op.n_y = ny;
  op.stiffness = SparseMatrix(cols * rows, cols * rows);
  op.stiffness.setFromTriplets(t.begin(), t.end());
  op.mass = Vector(cols * rows);
  for (int j = 1; j < ny; ++j)
    for (int i = 1; i < nxi; ++i) op.mass(id(i, j)) = w[2 * j] * hxi * hy;
  return op;
}

/// First Dirichlet eigenvalue of the strip between two curves.
inline double strip_lambda1(const Curve& left, const Curve& right, const StripOptions& opts = {}) {
  const StripOperator op = strip_operator(left, right, opts);
  const Vector s = op.mass.cwiseSqrt().cwiseInverse();
  const SparseMatrix a = s.asDiagonal() * op.stiffness * s.asDiagonal();
  return lowest_eigenpairs(a, 1, opts.eigen).values(0);
}

inline Curve constant_curve(double x) {
  return [x](double) { return x; };
}

// ---------------------------------------------------------------------------
// Deformations of the (m,1) strip partition along Sigma + t phi nu.

/// Interfaces x = x_i + t nu_x,i phi_i(y) with phi = f / rho, f a sine series
/// in the folded convention and rho = rho_amplitude sin(pi y / b). The normal
/// is nu = eta_j nu_j, so nu_x alternates +1, -1 along the interfaces.
struct StripFamily {
  separable::ModeIndex mode;
  separable::SineData f;
  double rho_amplitude = 1.0;

  int interface_count() const { return mode.interface_count(); }
  double base(int i) const { return (i + 1) * mode.strip_width(); }
  double normal_x(int i) const { return i % 2 == 0 ? 1.0 : -1.0; }
  double phi(int i, double y) const { return f.over_sin(i, y) / rho_amplitude; }

  /// Wall or interface curve k = 0..m at parameter t (k = 0 and m are walls).
  Curve curve(int k, double t) const {
    if (k == 0) return constant_curve(0.0);
    if (k == mode.m) return constant_curve(mode.a);
    const int i = k - 1;
    const StripFamily self = *this;
    return [self, i, t](double y) { return self.base(i) + t * self.normal_x(i) * self.phi(i, y); };
  }

  /// Throws OrderingViolation unless every curve stays strictly ordered.
  void check_ordering(double t, int samples = 401) const {
    for (int k = 0; k < mode.m; ++k) {
      const Curve lo = curve(k, t), hi = curve(k + 1, t);
      for (int s = 0; s <= samples; ++s) {
        const double y = mode.b * s / samples;
        if (!(lo(y) < hi(y)))
          throw Error(ErrorCode::OrderingViolation,
                      "curves " + std::to_string(k) + " and " + std::to_string(k + 1) +
                          " touch at y = " + std::to_string(y) + " for t = " + std::to_string(t));
      }
    }
  }
};

/// Unit-norm direction in L2(Sigma) from a spectrum item of the separable backend.
inline StripFamily family_from_item(const separable::StripSetup& setup, const separable::SpectrumItem& item) {
  StripFamily fam{setup.mode, separable::item_data(setup.mode, item), setup.rho_amplitude};
  fam.f.coefficients /= std::sqrt(fam.f.norm_squared());
  return fam;
}

/// Seeded random f = sum_{q = q_lo..q_hi} c_iq sin(q pi y / b), unit L2(Sigma)
/// norm. Every such f lies in S, so phi = f / rho is a tangent direction.
inline StripFamily random_family(const separable::StripSetup& setup, std::uint64_t seed, int q_lo = 2,
                                 int q_hi = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  separable::SineData f{setup.mode, Matrix::Zero(setup.mode.interface_count(), q_hi)};
  for (int i = 0; i < f.coefficients.rows(); ++i)
    for (int q = q_lo; q <= q_hi; ++q) f.coefficients(i, q - 1) = normal(rng);
  f.coefficients /= std::sqrt(f.norm_squared());
  return {setup.mode, f, setup.rho_amplitude};
}

/// Surrogate energy L(t) = sum_j a_j^2 lambda_1(strip j at t), with values cached.
struct DeformationFamily {
  StripFamily family;
  Vector a;
  StripOptions options;
  std::vector<int> n_xi;  // fixed per strip from the undeformed widths
  std::map<double, double> samples;

  DeformationFamily(StripFamily fam, Vector coefficients, StripOptions opts)
      : family(std::move(fam)), a(std::move(coefficients)), options(opts) {
    if (a.size() != family.mode.m) throw Error(ErrorCode::InvalidArgument, "one coefficient per strip");
    options.height = family.mode.b;
    for (int j = 0; j < family.mode.m; ++j)
      n_xi.push_back(std::max(4, static_cast<int>(std::lround(family.mode.strip_width() / options.h))));
  }
};

inline double strip_energy(const DeformationFamily& d, int j, double t) {
  StripOptions o = d.options;
  o.n_xi = d.n_xi[j];
  return strip_lambda1(d.family.curve(j, t), d.family.curve(j + 1, t), o);
}

inline double surrogate_energy(DeformationFamily& d, double t) {
  if (auto it = d.samples.find(t); it != d.samples.end()) return it->second;
  d.family.check_ordering(t);
  double l = 0.0;
  for (int j = 0; j < d.family.mode.m; ++j) l += d.a(j) * d.a(j) * strip_energy(d, j, t);
  d.samples[t] = l;
  return l;
}

struct HessianCheck {
  double t0 = 0.0;
  double second_3pt = 0.0;
  double second_5pt = 0.0;  // L''(0)
  double first = 0.0;       // central-difference L'(0)
  double quad_form = 0.0;   // 2 <Lambda(rho phi), rho phi>
  double discrepancy = 0.0;
  double floor = 0.0;
  std::array<double, 5> values{};  // L at -2t0, -t0, 0, t0, 2t0
};

/// Compares L''(0) by the five-point stencil with the DtN quadratic form.
inline HessianCheck hessian_check(DeformationFamily& d, double quad_form_value, double t0 = 1e-2,
                                  double floor = 1e-2) {
  HessianCheck c;
  c.t0 = t0;
  c.quad_form = quad_form_value;
  c.floor = floor;
  const double ts[5] = {-2 * t0, -t0, 0.0, t0, 2 * t0};
  for (int k = 0; k < 5; ++k) c.values[k] = surrogate_energy(d, ts[k]);
  const auto& v = c.values;
  c.second_3pt = (v[1] - 2 * v[2] + v[3]) / (t0 * t0);
  c.second_5pt = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * t0 * t0);
  c.first = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * t0);
  if (std::abs(c.second_5pt - c.second_3pt) > 0.2 * std::max(std::abs(c.second_5pt), floor))
    throw Error(ErrorCode::StepSize, "three- and five-point curvature estimates disagree; reduce t0");
  c.discrepancy = std::abs(c.second_5pt - quad_form_value) / std::max(std::abs(quad_form_value), floor);
  return c;
}

struct Snapshot {
  double t = 0.0;
  std::vector<std::vector<PolylinePoint>> interfaces;  // param = y
};

inline std::vector<Snapshot> emit_deformation(const StripFamily& fam, const std::vector<double>& ts,
                                              int samples = 100) {
  std::vector<Snapshot> out;
  for (double t : ts) {
    fam.check_ordering(t);
    Snapshot s{t, {}};
    for (int i = 0; i < fam.interface_count(); ++i) {
      const Curve c = fam.curve(i + 1, t);
      std::vector<PolylinePoint> line;
      for (int k = 0; k <= samples; ++k) {
        const double y = fam.mode.b * k / samples;
        line.push_back({y, c(y), y});
      }
      s.interfaces.push_back(std::move(line));
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Horizontal distance between interfaces i and i+1 at height y.
inline double gap(const StripFamily& fam, int i, double y, double t) {
  return fam.curve(i + 2, t)(y) - fam.curve(i + 1, t)(y);
}

}  // namespace nodal::strip
