#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nodal/criticality.hpp"
#include "nodal/dtn.hpp"
#include "nodal/error.hpp"
#include "nodal/linalg.hpp"
#include "nodal/partition.hpp"

// Semi-analytic (m,1) modes on an a x b rectangle. The nodal set is m-1
// vertical lines x_i = i a/m; interface data sin(q pi y/b) on each line
// decouple by transverse wavenumber q into (m-1)x(m-1) transmission blocks.
//
// Interface values are those of a single continuous profile g(x), which is the
// same as f under the normal nu = eta_j nu_j (chi_j = eta_j). The block maps
// g(x_i) to g'(x_i-) - g'(x_i+), the sign for which <Lambda f, f> is the
// Dirichlet form a(f, f).

namespace nodal::separable {

struct ModeIndex {
  int m = 1;
  int n = 1;
  double a = 1.0;
  double b = 1.0;

  double eigenvalue() const {
    return kPi * kPi * (double(m * m) / (a * a) + double(n * n) / (b * b));
  }
  double strip_width() const { return a / m; }
  int interface_count() const { return m - 1; }
};

inline void check_mode(const ModeIndex& mode) {
  if (mode.m < 1 || mode.n < 1) throw Error(ErrorCode::InvalidArgument, "mode indices must be positive");
  if (!(mode.a > 0.0 && mode.b > 0.0)) throw Error(ErrorCode::InvalidArgument, "rectangle sides must be positive");
  if (mode.n != 1)
    throw Error(ErrorCode::UnsupportedGeometry,
                "only (m,1) modes have vertical-strip nodal partitions without crossings");
}

/// Number of ordered pairs (m', n') with the same eigenvalue, relative gap 1e-6.
inline int multiplicity(const ModeIndex& mode, double rel_tol = 1e-6) {
  const double target = mode.eigenvalue();
  const int mmax = static_cast<int>(std::ceil(mode.a * std::sqrt(target) / kPi)) + 1;
  const int nmax = static_cast<int>(std::ceil(mode.b * std::sqrt(target) / kPi)) + 1;
  int count = 0;
  for (int i = 1; i <= mmax; ++i)
    for (int j = 1; j <= nmax; ++j) {
      const double v = kPi * kPi * (double(i * i) / (mode.a * mode.a) + double(j * j) / (mode.b * mode.b));
      if (std::abs(v - target) <= rel_tol * target) ++count;
    }
  return count;
}

struct TransmissionBlock {
  int q = 0;
  double mu2 = 0.0;   // lambda* - (q pi / b)^2
  Matrix basis;       // interface-value coordinates of the admissible subspace
  Matrix matrix;      // symmetric, dim = basis.cols()
  bool resonant = false;

  int dimension() const { return static_cast<int>(matrix.rows()); }
};

inline double longitudinal_mu2(const ModeIndex& mode, int q) {
  return mode.eigenvalue() - (q * kPi / mode.b) * (q * kPi / mode.b);
}

inline bool is_resonant(const ModeIndex& mode, int q, double tol = 1e-10) {
  const double mu2 = longitudinal_mu2(mode, q);
  if (mu2 <= 0.0) return false;
  return std::abs(std::sin(std::sqrt(mu2) * mode.strip_width())) <= tol;
}

struct StripCoefficients {
  double diagonal = 0.0;     // response at an interface to its own value, per adjacent strip pair
  double off_diagonal = 0.0;
};

/// Tridiagonal entries for equal strips of width w at longitudinal frequency mu2.
inline StripCoefficients strip_coefficients(double mu2, double w) {
  StripCoefficients c;
  if (mu2 > 1e-12) {
    const double mu = std::sqrt(mu2);
    const double s = std::sin(mu * w);
    c.diagonal = 2.0 * mu * std::cos(mu * w) / s;
    c.off_diagonal = -mu / s;
  } else if (mu2 < -1e-12) {
    const double kappa = std::sqrt(-mu2);
    const double e = std::exp(-2.0 * kappa * w);
    c.diagonal = 2.0 * kappa * (1.0 + e) / (1.0 - e);                     // 2 kappa coth
    c.off_diagonal = -kappa * 2.0 * std::exp(-kappa * w) / (1.0 - e);      // -kappa / sinh
  } else {
    c.diagonal = 2.0 / w;
    c.off_diagonal = -1.0 / w;
  }
  return c;
}

inline TransmissionBlock assemble_block(const ModeIndex& mode, int q) {
  check_mode(mode);
  if (q < 1) throw Error(ErrorCode::InvalidArgument, "transverse wavenumber must be >= 1");
  if (is_resonant(mode, q))
    throw Error(ErrorCode::Resonance, "q = " + std::to_string(q) + " is resonant; use resonant_block");
  const int d = mode.interface_count();
  TransmissionBlock blk;
  blk.q = q;
  blk.mu2 = longitudinal_mu2(mode, q);
  blk.basis = Matrix::Identity(d, d);
  blk.matrix = Matrix::Zero(d, d);
  const StripCoefficients c = strip_coefficients(blk.mu2, mode.strip_width());
  for (int i = 0; i < d; ++i) {
    blk.matrix(i, i) = c.diagonal;
    if (i + 1 < d) {
      blk.matrix(i, i + 1) = c.off_diagonal;
      blk.matrix(i + 1, i) = c.off_diagonal;
    }
  }
  return blk;
}

/// Resonant sector: each strip's ground state forces g(left) + g(right) = 0,
/// and compatible data produce u = g(left) cos(pi s / w) with zero endpoint
/// derivatives, so the block is zero on the admissible subspace.
inline TransmissionBlock resonant_block(const ModeIndex& mode, int q) {
  check_mode(mode);
  if (!is_resonant(mode, q))
    throw Error(ErrorCode::WrongEntryPoint, "q = " + std::to_string(q) + " is not resonant");
  const int d = mode.interface_count();
  TransmissionBlock blk;
  blk.q = q;
  blk.mu2 = longitudinal_mu2(mode, q);
  blk.resonant = true;
  if (d == 0) {
    blk.basis = Matrix(0, 0);
    blk.matrix = Matrix(0, 0);
    return blk;
  }
  Matrix constraints = Matrix::Zero(mode.m, d);
  for (int strip = 0; strip < mode.m; ++strip) {
    if (strip - 1 >= 0) constraints(strip, strip - 1) += 1.0;
    if (strip <= d - 1) constraints(strip, strip) += 1.0;
  }
  NullSpace ns = weighted_null_space(constraints, Vector::Ones(d));
  blk.basis = ns.basis;
  blk.matrix = Matrix::Zero(ns.basis.cols(), ns.basis.cols());
  return blk;
}

inline TransmissionBlock block(const ModeIndex& mode, int q) {
  return is_resonant(mode, q) ? resonant_block(mode, q) : assemble_block(mode, q);
}

/// Blocks with (q pi / b)^2 > lambda* are positive definite by diagonal dominance.
inline bool certified_positive(const ModeIndex& mode, int q) {
  const double mu2 = longitudinal_mu2(mode, q);
  if (mu2 >= 0.0) return false;
  const StripCoefficients c = strip_coefficients(mu2, mode.strip_width());
  const double bound = mode.interface_count() > 1 ? 2.0 * std::abs(c.off_diagonal) : 0.0;
  return c.diagonal - bound > 0.0;
}

inline int evanescent_cutoff(const ModeIndex& mode) {
  return static_cast<int>(std::ceil(mode.b * std::sqrt(mode.eigenvalue()) / kPi)) + 1;
}

struct SpectrumItem {
  double sigma = 0.0;
  int q = 0;
  Vector values;  // interface values g(x_1), ..., g(x_{m-1}), unit norm
};

struct SeparableSpectrum {
  ModeIndex mode;
  int q_max = 0;
  std::vector<SpectrumItem> items;  // ascending sigma
  int negative = 0;
  int zero = 0;
  double zero_threshold = 1e-9;
  bool tail_certified = false;  // every block beyond the cutoff is positive definite
};

inline Vector canonical_sign(Vector v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      break;
    }
  return v;
}

inline SeparableSpectrum dtn_spectrum(const ModeIndex& mode, int q_max, double zero_threshold = 1e-9) {
  check_mode(mode);
  const int cutoff = evanescent_cutoff(mode);
  if (q_max < cutoff)
    throw Error(ErrorCode::InsufficientCutoff,
                "q_max must be at least " + std::to_string(cutoff) + " for complete counts");
  SeparableSpectrum out;
  out.mode = mode;
  out.q_max = q_max;
  out.zero_threshold = zero_threshold;
  for (int q = 1; q <= q_max; ++q) {
    const TransmissionBlock blk = block(mode, q);
    if (blk.dimension() == 0) continue;
    const SymmetricEigen eig = symmetric_eigen(blk.matrix);
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
      Vector v = blk.basis * eig.vectors.col(i);
      out.items.push_back({eig.values(i), q, canonical_sign(v / v.norm())});
    }
  }
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const SpectrumItem& x, const SpectrumItem& y) { return x.sigma < y.sigma; });
  for (const auto& it : out.items) {
    if (it.sigma < -zero_threshold) ++out.negative;
    else if (std::abs(it.sigma) <= zero_threshold) ++out.zero;
  }
  out.tail_certified = true;
  for (int q = std::max(q_max + 1, cutoff); q <= q_max + 5; ++q)
    out.tail_certified = out.tail_certified && (mode.m == 1 || certified_positive(mode, q));
  return out;
}

// ---------------------------------------------------------------------------
// Partition, traces and weight for the strip partition of an (m,1) mode.

/// Interior interface nodes y_j = j b / ny, j = 1..ny-1, with weight b / ny.
inline Partition strip_partition(const ModeIndex& mode, int ny) {
  check_mode(mode);
  if (ny < 2) throw Error(ErrorCode::InvalidArgument, "need at least one interior node per interface");
  const double w = mode.strip_width();
  const double hy = mode.b / ny;
  Partition p;
  p.domain = Domain::rectangle(mode.a, mode.b);
  for (int j = 0; j < mode.m; ++j) p.subdomains.push_back({j, w * mode.b, "strip" + std::to_string(j)});
  for (int i = 0; i < mode.interface_count(); ++i) {
    Interface f;
    f.id = i;
    f.subdomains = {i, i + 1};
    const int eta_left = (i % 2 == 0) ? 1 : -1;
    f.chi = {eta_left, -eta_left};
    for (int j = 1; j < ny; ++j) f.polyline.push_back({j * hy, (i + 1) * w, j * hy});
    p.interfaces.push_back(f);
  }
  validate(p);
  return p;
}

/// Amplitude of the outward derivative of a unit strip ground state:
/// psi = 2/sqrt(w b) sin(pi s / w) sin(pi y / b), so |d_nu psi| = amp sin(pi y / b).
inline double trace_amplitude(const ModeIndex& mode) {
  const double w = mode.strip_width();
  return 2.0 / std::sqrt(w * mode.b) * (kPi / w);
}

inline InterfaceTraces strip_traces(const ModeIndex& mode, const Partition& p) {
  InterfaceTraces t;
  const double hy = mode.b / (p.interfaces.empty() ? 1 : p.interfaces[0].polyline.size() + 1);
  t.mesh = mesh_from_polylines(p, hy);
  const double amp = trace_amplitude(mode);
  for (const auto& node : t.mesh.nodes) {
    const double d = -amp * std::sin(kPi * node.y / mode.b);
    t.normal_derivative.push_back({d, d});
  }
  return t;
}

struct StripSetup {
  ModeIndex mode;
  Partition partition;
  InterfaceTraces traces;
  CoefficientFit coefficients;
  WeightRho rho;
  double rho_amplitude = 0.0;  // rho(y) = rho_amplitude * sin(pi y / b)
};

inline StripSetup strip_setup(const ModeIndex& mode, int ny) {
  StripSetup s;
  s.mode = mode;
  s.partition = strip_partition(mode, ny);
  s.traces = strip_traces(mode, s.partition);
  if (mode.m >= 2) {
    s.coefficients = solve_coefficients(s.partition, s.traces);
    s.rho = compute_rho(s.partition, s.coefficients.a, s.traces);
    s.rho_amplitude = std::abs(s.coefficients.a[0]) * trace_amplitude(mode);
  } else {
    s.coefficients.a.values = Vector::Ones(1);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Interface data as sine series and deformation directions phi = f / rho.

/// f_i(y) = sum_q coefficients(i, q-1) sin(q pi y / b).
struct SineData {
  ModeIndex mode;
  Matrix coefficients;  // (m-1) x q_count

  double value(int interface, double y) const {
    double s = 0.0;
    for (Eigen::Index q = 1; q <= coefficients.cols(); ++q)
      s += coefficients(interface, q - 1) * std::sin(q * kPi * y / mode.b);
    return s;
  }

  /// f_i(y) / sin(pi y / b), finite at the walls: sin(q t) / sin(t) = U_{q-1}(cos t).
  double over_sin(int interface, double y) const {
    const double x = std::cos(kPi * y / mode.b);
    double u_prev = 0.0, u = 1.0, s = 0.0;
    for (Eigen::Index q = 1; q <= coefficients.cols(); ++q) {
      s += coefficients(interface, q - 1) * u;
      const double next = 2.0 * x * u - u_prev;
      u_prev = u;
      u = next;
    }
    return s;
  }

  /// <Lambda f, f>_{L2(Sigma)} from the transmission blocks; the q = 1
  /// content lies outside S and must vanish.
  double quadratic_form() const {
    double total = 0.0;
    for (Eigen::Index q = 1; q <= coefficients.cols(); ++q) {
      const Vector c = coefficients.col(q - 1);
      const TransmissionBlock blk = block(mode, static_cast<int>(q));
      if (blk.resonant) {
        const Vector outside = c - blk.basis * (blk.basis.transpose() * c);
        if (outside.norm() > 1e-10 * std::max(1.0, coefficients.norm()))
          throw Error(ErrorCode::IncompatibleData, "interface data has a component outside S");
        continue;
      }
      total += c.dot(blk.matrix * c) * 0.5 * mode.b;
    }
    return total;
  }

  /// ||f||^2 in L2(Sigma).
  double norm_squared() const { return coefficients.squaredNorm() * 0.5 * mode.b; }
};

/// Sine coefficients of samples at y_j = j b / N, j = 1..N-1 (exact for
/// trigonometric polynomials of degree below N).
inline SineData sine_transform(const ModeIndex& mode, const Matrix& samples) {
  const Eigen::Index nodes = samples.cols();
  const Eigen::Index big_n = nodes + 1;
  SineData d{mode, Matrix::Zero(samples.rows(), nodes)};
  for (Eigen::Index q = 1; q <= nodes; ++q)
    for (Eigen::Index j = 1; j <= nodes; ++j) {
      const double s = std::sin(kPi * double(q * j) / double(big_n));
      d.coefficients.col(q - 1) += samples.col(j - 1) * (2.0 / big_n) * s;
    }
  return d;
}

/// Eigenfunction samples at the interior nodes of the setup: f on Sigma and
/// phi = f / rho.
struct Reconstruction {
  Vector f;    // node order of the setup's mesh
  Vector phi;
};

inline Reconstruction reconstruct_eigenfunctions(const SpectrumItem& item, const StripSetup& setup) {
  const auto& nodes = setup.traces.mesh.nodes;
  if (setup.rho.values.size() != static_cast<Eigen::Index>(nodes.size()))
    throw Error(ErrorCode::InvalidArgument, "weight does not match the interface mesh");
  Reconstruction r{Vector(nodes.size()), Vector(nodes.size())};
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    r.f(k) = item.values(nodes[k].interface) * std::sin(item.q * kPi * nodes[k].y / setup.mode.b);
    if (!(setup.rho.values(k) > 0.0))
      throw Error(ErrorCode::GenericityViolation, "weight vanishes at an interior node");
    r.phi(k) = r.f(k) / setup.rho.values(k);
  }
  return r;
}

/// The sine data of a single spectrum item.
inline SineData item_data(const ModeIndex& mode, const SpectrumItem& item) {
  SineData d{mode, Matrix::Zero(mode.interface_count(), item.q)};
  d.coefficients.col(item.q - 1) = item.values;
  return d;
}

/// Lambda on trigonometric interface data of degree below ny, in node space:
/// basis columns are v sin(q pi y / b) sqrt(2 / b) for each block vector v, and
/// the matrix is block diagonal in q.
inline DtnOperator separable_dtn_operator(const StripSetup& setup) {
  const ModeIndex& mode = setup.mode;
  const InterfaceMesh& mesh = setup.traces.mesh;
  const int d = mode.interface_count();
  DtnOperator op;
  op.mesh = mesh;
  if (d == 0) {
    op.basis = Matrix(mesh.size(), 0);
    op.matrix = Matrix(0, 0);
    return op;
  }
  const int per = mesh.size() / d;
  std::vector<TransmissionBlock> blocks;
  int dim = 0;
  for (int q = 1; q <= per; ++q) {
    blocks.push_back(block(mode, q));
    dim += blocks.back().dimension();
  }
  op.basis = Matrix::Zero(mesh.size(), dim);
  op.matrix = Matrix::Zero(dim, dim);
  int offset = 0;
  for (const TransmissionBlock& blk : blocks) {
    for (Eigen::Index c = 0; c < blk.basis.cols(); ++c)
      for (int k = 0; k < mesh.size(); ++k) {
        const InterfaceNode& n = mesh.nodes[k];
        op.basis(k, offset + c) =
            blk.basis(n.interface, c) * std::sqrt(2.0 / mode.b) * std::sin(blk.q * kPi * n.y / mode.b);
      }
    op.matrix.block(offset, offset, blk.dimension(), blk.dimension()) = blk.matrix;
    offset += blk.dimension();
  }
  return op;
}

}  // namespace nodal::separable
